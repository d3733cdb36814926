use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterParams, DEFAULT_MIN_CLUSTER_SIZE};
use crate::compare::{Thresholds, DEFAULT_HIGH_THRESHOLD, DEFAULT_LOW_THRESHOLD};
use crate::embed::ProviderConfig;
use crate::eval::DEFAULT_RUNS;
use crate::ingest::{FilterParams, DEFAULT_MIN_CHARS, DEFAULT_MIN_SPACES, DEFAULT_NOISE_RATIO};
use crate::synth::{PlantedJargon, SynthSpec};
use crate::topic::{LdaParams, DEFAULT_KEYWORD_UNRECOGNIZED, DEFAULT_REVIEW_FRACTION, DEFAULT_TOP_N};

use super::PipelineError;

/// Wide enough that a few thousand distinct tokens rarely share a bucket.
pub const DEFAULT_PROVIDER: &str = "hash:2048";

/// Every knob of a run. The on-disk form is a flat `key = value` file whose
/// keys are these field names; absent keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Raw posts (JSON lines). When unset, the synth stage's corpus is used.
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,

    /// `hash:DIM[:SEED]`, `file:PATH` or `remote:URL`.
    pub provider: String,
    pub max_in_flight: usize,
    pub batch_size: usize,
    /// Word-for-word translation table (`source<TAB>target`).
    pub translation_table: Option<PathBuf>,
    /// Remote translation service; takes precedence over the table.
    pub translator_endpoint: Option<String>,
    pub translator_timeout_secs: u64,

    pub noise_ratio: f64,
    pub min_spaces: usize,
    pub min_chars: usize,

    pub min_cluster_size: usize,
    pub min_samples: Option<usize>,

    pub lda_topics: usize,
    pub lda_beta: f64,
    pub lda_alpha: Option<f64>,
    pub lda_iterations: usize,
    pub top_n: usize,

    pub dictionary: Option<PathBuf>,
    pub glossaries: Vec<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub keyword_unrecognized: f64,
    pub review_fraction: f64,

    pub high_threshold: f64,
    pub low_threshold: f64,

    pub eval_providers: Vec<String>,
    pub eval_runs: usize,

    pub synth_shared_topics: usize,
    pub synth_unique_russian: usize,
    pub synth_unique_english: usize,
    pub synth_docs_per_topic: usize,
    pub synth_noise_fraction: f64,
    /// Planted terms as `term:topic`.
    pub synth_jargon: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let synth = SynthSpec::default();
        let lda = LdaParams::default();
        Self {
            input: None,
            out_dir: PathBuf::from("pocketlens-out"),
            seed: 0,
            provider: DEFAULT_PROVIDER.to_string(),
            max_in_flight: crate::embed::DEFAULT_MAX_IN_FLIGHT,
            batch_size: crate::embed::DEFAULT_BATCH_SIZE,
            translation_table: None,
            translator_endpoint: None,
            translator_timeout_secs: 30,
            noise_ratio: DEFAULT_NOISE_RATIO,
            min_spaces: DEFAULT_MIN_SPACES,
            min_chars: DEFAULT_MIN_CHARS,
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
            min_samples: None,
            lda_topics: lda.topic_count,
            lda_beta: lda.beta,
            lda_alpha: lda.alpha,
            lda_iterations: lda.iterations,
            top_n: DEFAULT_TOP_N,
            dictionary: None,
            glossaries: Vec::new(),
            lexicon: None,
            stopwords: None,
            keyword_unrecognized: DEFAULT_KEYWORD_UNRECOGNIZED,
            review_fraction: DEFAULT_REVIEW_FRACTION,
            high_threshold: DEFAULT_HIGH_THRESHOLD,
            low_threshold: DEFAULT_LOW_THRESHOLD,
            eval_providers: Vec::new(),
            eval_runs: DEFAULT_RUNS,
            synth_shared_topics: synth.shared_topic_count,
            synth_unique_russian: synth.unique_russian_count,
            synth_unique_english: synth.unique_english_count,
            synth_docs_per_topic: synth.docs_per_topic,
            synth_noise_fraction: synth.noise_fraction,
            synth_jargon: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let config: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.provider_config()?;
        for p in &self.eval_providers {
            parse_provider(p, self)?;
        }
        self.synth_spec()?;
        if !(0.0..=1.0).contains(&self.noise_ratio) {
            return bad(format!("noise_ratio {} outside [0, 1]", self.noise_ratio));
        }
        if !(0.0..=1.0).contains(&self.keyword_unrecognized) {
            return bad(format!("keyword_unrecognized {} outside [0, 1]", self.keyword_unrecognized));
        }
        if !(0.0..=1.0).contains(&self.review_fraction) {
            return bad(format!("review_fraction {} outside [0, 1]", self.review_fraction));
        }
        if !(0.0 <= self.low_threshold && self.low_threshold <= self.high_threshold && self.high_threshold <= 1.0) {
            return bad(format!(
                "thresholds must satisfy 0 <= low ({}) <= high ({}) <= 1",
                self.low_threshold, self.high_threshold
            ));
        }
        if self.min_cluster_size < 2 {
            return bad("min_cluster_size must be at least 2".into());
        }
        if self.min_samples == Some(0) {
            return bad("min_samples must be positive".into());
        }
        if self.lda_topics == 0 || !(self.lda_beta > 0.0) || self.lda_alpha.is_some_and(|a| !(a > 0.0)) {
            return bad("lda_topics, lda_beta and lda_alpha must be positive".into());
        }
        if self.top_n == 0 {
            return bad("top_n must be positive".into());
        }
        if self.eval_runs < 2 {
            return bad("eval_runs must be at least 2".into());
        }
        if self.max_in_flight == 0 || self.batch_size == 0 {
            return bad("max_in_flight and batch_size must be positive".into());
        }
        Ok(())
    }

    pub fn provider_config(&self) -> Result<ProviderConfig, PipelineError> {
        parse_provider(&self.provider, self)
    }

    pub fn eval_provider_configs(&self) -> Result<Vec<ProviderConfig>, PipelineError> {
        if self.eval_providers.is_empty() {
            return Ok(vec![self.provider_config()?]);
        }
        self.eval_providers.iter().map(|p| parse_provider(p, self)).collect()
    }

    pub fn filter_params(&self) -> FilterParams {
        FilterParams {
            noise_ratio: self.noise_ratio,
            min_spaces: self.min_spaces,
            min_chars: self.min_chars,
        }
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            min_cluster_size: self.min_cluster_size,
            min_samples: self.min_samples,
        }
    }

    pub fn lda_params(&self) -> LdaParams {
        LdaParams {
            topic_count: self.lda_topics,
            beta: self.lda_beta,
            alpha: self.lda_alpha,
            iterations: self.lda_iterations,
            seed: self.seed,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            high: self.high_threshold,
            low: self.low_threshold,
        }
    }

    pub fn synth_spec(&self) -> Result<SynthSpec, PipelineError> {
        let jargon_terms = self
            .synth_jargon
            .iter()
            .map(|s| {
                let (term, topic) = s
                    .rsplit_once(':')
                    .ok_or_else(|| PipelineError::Config(format!("synth_jargon entry {s:?} is not term:topic")))?;
                let host_topic = topic
                    .parse()
                    .map_err(|_| PipelineError::Config(format!("synth_jargon entry {s:?} has a bad topic")))?;
                Ok(PlantedJargon {
                    term: term.to_string(),
                    host_topic,
                })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        Ok(SynthSpec {
            shared_topic_count: self.synth_shared_topics,
            unique_russian_count: self.synth_unique_russian,
            unique_english_count: self.synth_unique_english,
            docs_per_topic: self.synth_docs_per_topic,
            noise_fraction: self.synth_noise_fraction,
            jargon_terms,
            seed: self.seed,
            ..SynthSpec::default()
        })
    }

    /// Keys whose values differ from the defaults, rendered as TOML values.
    pub fn overrides(&self) -> BTreeMap<String, String> {
        let ours = table(self);
        let defaults = table(&Self::default());
        ours.into_iter()
            .filter(|(k, v)| defaults.get(k) != Some(v))
            .map(|(k, v)| (k, v.to_string()))
            .collect()
    }
}

fn table(config: &PipelineConfig) -> BTreeMap<String, toml::Value> {
    match toml::Value::try_from(config).expect("config serializes") {
        toml::Value::Table(t) => t.into_iter().collect(),
        _ => unreachable!("struct serializes to a table"),
    }
}

fn parse_provider(spec: &str, config: &PipelineConfig) -> Result<ProviderConfig, PipelineError> {
    let provider = ProviderConfig::parse_spec(spec)
        .ok_or_else(|| PipelineError::Config(format!("unrecognized provider {spec:?}")))?;
    Ok(match provider {
        ProviderConfig::Remote { endpoint, .. } => ProviderConfig::Remote {
            endpoint,
            max_in_flight: config.max_in_flight,
            batch_size: config.batch_size,
        },
        other => other,
    })
}
