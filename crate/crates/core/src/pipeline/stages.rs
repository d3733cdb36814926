use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::json;

use crate::cluster::{cluster, read_clustering, write_clustering, Clustering};
use crate::compare::{compare_all, extract_jargon, write_jargon_report, RelatednessReport};
use crate::embed::{embed_batch, normalize, read_vectors, write_vectors, EmbedError};
use crate::eval::{compare_models, write_model_report};
use crate::ingest::{build_corpus, read_paragraphs, read_posts, write_paragraphs, Language, Paragraph, ScriptDetector};
use crate::synth;
use crate::topic::{
    filter_clusters, parse_word_list, represent_clusters, review_sample, write_cluster_report, EnrichedDictionary,
    PosLexicon, RepresentConfig, TopicCluster, Tokenizer,
};
use crate::translate::{IdentityTranslator, RemoteTranslator, TableTranslator, Translator};

use super::manifest::hash_bytes;
use super::report::render_report;
use super::{PipelineConfig, PipelineError, Stage};

/// Artifact file names inside the output directory.
pub mod artifacts {
    pub const SYNTH_DIR: &str = "synth";
    pub const CORPUS_STATS: &str = "corpus_stats.json";
    pub const REVIEW_SAMPLE: &str = "review_sample.json";
    pub const PAIRS: &str = "pairs.tsv";
    pub const HISTOGRAM: &str = "histogram.tsv";
    pub const TOPICS: &str = "topics.tsv";
    pub const RELATEDNESS: &str = "relatedness.json";
    pub const JARGON_TSV: &str = "jargon.tsv";
    pub const JARGON_JSON: &str = "jargon.json";
    pub const EVAL_TSV: &str = "eval.tsv";
    pub const EVAL_JSON: &str = "eval.json";
    pub const REPORT: &str = "report.md";

    pub fn paragraphs(lang: &str) -> String {
        format!("paragraphs_{lang}.jsonl")
    }
    pub fn embeddings(lang: &str) -> String {
        format!("embeddings_{lang}.vec")
    }
    pub fn clusters(lang: &str) -> String {
        format!("clusters_{lang}.tsv")
    }
    pub fn condensed_tree(lang: &str) -> String {
        format!("condensed_tree_{lang}.tsv")
    }
    pub fn topic_clusters(lang: &str) -> String {
        format!("topics_{lang}.json")
    }
    pub fn cluster_report(lang: &str) -> String {
        format!("cluster_report_{lang}.tsv")
    }
}

const LANGUAGES: [Language; 2] = [Language::English, Language::Russian];

fn synth_dir(c: &PipelineConfig) -> PathBuf {
    c.out_dir.join(artifacts::SYNTH_DIR)
}

/// An explicitly configured path, else the synth stage's file when present.
fn resource(c: &PipelineConfig, explicit: &Option<PathBuf>, synth_name: &str) -> Option<PathBuf> {
    if explicit.is_some() {
        return explicit.clone();
    }
    if c.input.is_some() {
        return None;
    }
    let p = synth_dir(c).join(synth_name);
    p.exists().then_some(p)
}

fn input_corpus(c: &PipelineConfig) -> PathBuf {
    c.input.clone().unwrap_or_else(|| synth_dir(c).join(synth::CORPUS_FILE))
}

fn translation_table(c: &PipelineConfig) -> Option<PathBuf> {
    resource(c, &c.translation_table, synth::TRANSLATION_FILE)
}

fn dictionary(c: &PipelineConfig) -> Option<PathBuf> {
    resource(c, &c.dictionary, synth::DICTIONARY_FILE)
}

fn lexicon(c: &PipelineConfig) -> Option<PathBuf> {
    resource(c, &c.lexicon, synth::LEXICON_FILE)
}

fn glossaries(c: &PipelineConfig) -> Vec<PathBuf> {
    if !c.glossaries.is_empty() {
        return c.glossaries.clone();
    }
    resource(c, &None, synth::GLOSSARY_FILE).into_iter().collect()
}

fn per_language(c: &PipelineConfig, name: fn(&str) -> String) -> Vec<PathBuf> {
    LANGUAGES.iter().map(|l| c.out_dir.join(name(l.code()))).collect()
}

/// Files a stage writes (excluding its manifest).
pub fn outputs(c: &PipelineConfig, stage: Stage) -> Vec<PathBuf> {
    let out = &c.out_dir;
    match stage {
        Stage::Synth => [
            synth::CORPUS_FILE,
            synth::TRUTH_FILE,
            synth::TRANSLATION_FILE,
            synth::DICTIONARY_FILE,
            synth::GLOSSARY_FILE,
            synth::LEXICON_FILE,
        ]
        .iter()
        .map(|n| synth_dir(c).join(n))
        .collect(),
        Stage::Ingest => {
            let mut v = per_language(c, artifacts::paragraphs);
            v.push(out.join(artifacts::CORPUS_STATS));
            v
        }
        Stage::Embed => per_language(c, artifacts::embeddings),
        Stage::Cluster => {
            let mut v = per_language(c, artifacts::clusters);
            v.extend(per_language(c, artifacts::condensed_tree));
            v
        }
        Stage::Represent => {
            let mut v = per_language(c, artifacts::topic_clusters);
            v.extend(per_language(c, artifacts::cluster_report));
            v.push(out.join(artifacts::REVIEW_SAMPLE));
            v
        }
        Stage::Compare => [artifacts::PAIRS, artifacts::HISTOGRAM, artifacts::TOPICS, artifacts::RELATEDNESS]
            .iter()
            .map(|n| out.join(n))
            .collect(),
        Stage::Jargon => vec![out.join(artifacts::JARGON_TSV), out.join(artifacts::JARGON_JSON)],
        Stage::Eval => vec![out.join(artifacts::EVAL_TSV), out.join(artifacts::EVAL_JSON)],
        Stage::Report => vec![out.join(artifacts::REPORT)],
    }
}

/// Files a stage reads: earlier artifacts plus external resources.
pub fn inputs(c: &PipelineConfig, stage: Stage) -> Vec<PathBuf> {
    let mut v = Vec::new();
    match stage {
        Stage::Synth => {}
        Stage::Ingest => {
            v.push(input_corpus(c));
            v.extend(translation_table(c));
        }
        Stage::Embed => {
            v.extend(per_language(c, artifacts::paragraphs));
            if let Ok(crate::embed::ProviderConfig::File { path }) = c.provider_config() {
                v.push(path);
            }
        }
        Stage::Cluster => v.extend(per_language(c, artifacts::embeddings)),
        Stage::Represent => {
            v.extend(per_language(c, artifacts::paragraphs));
            v.extend(per_language(c, artifacts::clusters));
            v.extend(dictionary(c));
            v.extend(lexicon(c));
            v.extend(c.stopwords.clone());
        }
        Stage::Compare => v.extend(per_language(c, artifacts::topic_clusters)),
        Stage::Jargon => {
            v.extend(per_language(c, artifacts::topic_clusters));
            v.extend(glossaries(c));
        }
        Stage::Eval => v.extend(per_language(c, artifacts::paragraphs)),
        Stage::Report => {
            v.extend(per_language(c, artifacts::topic_clusters));
            v.push(c.out_dir.join(artifacts::RELATEDNESS));
            let jargon = c.out_dir.join(artifacts::JARGON_JSON);
            if jargon.exists() {
                v.push(jargon);
            }
        }
    }
    v
}

/// Hash of the config values a stage's output depends on.
pub fn config_hash(c: &PipelineConfig, stage: Stage) -> String {
    let slice = match stage {
        Stage::Synth => json!({ "spec": c.synth_spec().ok() }),
        Stage::Ingest => json!({
            "input": c.input,
            "translation_table": c.translation_table,
            "translator_endpoint": c.translator_endpoint,
            "filters": c.filter_params(),
        }),
        Stage::Embed => json!({ "provider": c.provider_config().ok() }),
        Stage::Cluster => json!({ "params": c.cluster_params() }),
        Stage::Represent => json!({
            "lda": c.lda_params(),
            "top_n": c.top_n,
            "dictionary": c.dictionary,
            "lexicon": c.lexicon,
            "stopwords": c.stopwords,
            "keyword_unrecognized": c.keyword_unrecognized,
            "review_fraction": c.review_fraction,
        }),
        Stage::Compare => json!({ "thresholds": c.thresholds() }),
        Stage::Jargon => json!({ "glossaries": c.glossaries }),
        Stage::Eval => json!({
            "providers": c.eval_provider_configs().ok(),
            "runs": c.eval_runs,
            "params": c.cluster_params(),
        }),
        Stage::Report => json!({}),
    };
    let doc = json!({ "stage": stage.name(), "version": super::VERSION, "config": slice });
    hash_bytes(doc.to_string().as_bytes())
}

pub fn run(c: &PipelineConfig, stage: Stage) -> Result<Vec<PathBuf>, PipelineError> {
    match stage {
        Stage::Synth => run_synth(c),
        Stage::Ingest => run_ingest(c),
        Stage::Embed => run_embed(c),
        Stage::Cluster => run_cluster(c),
        Stage::Represent => run_represent(c),
        Stage::Compare => run_compare(c),
        Stage::Jargon => run_jargon(c),
        Stage::Eval => run_eval(c),
        Stage::Report => run_report(c),
    }?;
    Ok(outputs(c, stage))
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::io(path, e))
}

/// Creates `path`, hands the writer to `body`, and flushes.
fn write_with(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), PipelineError> {
    let mut w = create(path)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| PipelineError::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), PipelineError> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

fn read_json<T: serde::de::DeserializeOwned>(stage: Stage, path: &Path) -> Result<T, PipelineError> {
    serde_json::from_reader(open(path)?).map_err(|e| PipelineError::stage(stage, format!("{}: {e}", path.display())))
}

fn load_paragraphs(c: &PipelineConfig, stage: Stage, lang: Language) -> Result<Vec<Paragraph>, PipelineError> {
    let path = c.out_dir.join(artifacts::paragraphs(lang.code()));
    read_paragraphs(open(&path)?).map_err(|e| PipelineError::stage(stage, format!("{}: {e}", path.display())))
}

fn load_topics(c: &PipelineConfig, stage: Stage, lang: Language) -> Result<Vec<TopicCluster>, PipelineError> {
    read_json(stage, &c.out_dir.join(artifacts::topic_clusters(lang.code())))
}

fn run_synth(c: &PipelineConfig) -> Result<(), PipelineError> {
    let spec = c.synth_spec()?;
    let corpus = synth::generate(&spec).map_err(|e| PipelineError::stage(Stage::Synth, e))?;
    corpus
        .write_to_dir(&synth_dir(c))
        .map_err(|e| PipelineError::stage(Stage::Synth, e))?;
    Ok(())
}

fn translator(c: &PipelineConfig) -> Result<Box<dyn Translator>, PipelineError> {
    if let Some(endpoint) = &c.translator_endpoint {
        return Ok(Box::new(RemoteTranslator::new(
            endpoint,
            Duration::from_secs(c.translator_timeout_secs),
        )));
    }
    match translation_table(c) {
        Some(path) => Ok(Box::new(
            TableTranslator::from_path(&path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?,
        )),
        None => Ok(Box::new(IdentityTranslator)),
    }
}

fn run_ingest(c: &PipelineConfig) -> Result<(), PipelineError> {
    let path = input_corpus(c);
    let posts = read_posts(open(&path)?).map_err(|e| PipelineError::stage(Stage::Ingest, format!("{}: {e}", path.display())))?;
    let translator = translator(c)?;
    let corpus = build_corpus(&posts, &ScriptDetector, translator.as_ref(), &c.filter_params());
    log::info!(
        "ingest: {} english, {} russian paragraphs",
        corpus.english.len(),
        corpus.russian.len()
    );
    for (lang, paragraphs) in [(Language::English, &corpus.english), (Language::Russian, &corpus.russian)] {
        let path = c.out_dir.join(artifacts::paragraphs(lang.code()));
        write_with(&path, |w| write_paragraphs(w, paragraphs))?;
    }
    write_json(&c.out_dir.join(artifacts::CORPUS_STATS), &corpus.stats)
}

fn provider_error(e: EmbedError) -> PipelineError {
    PipelineError::Provider(e.to_string())
}

fn run_embed(c: &PipelineConfig) -> Result<(), PipelineError> {
    let provider = c.provider_config()?;
    for lang in LANGUAGES {
        let paragraphs = load_paragraphs(c, Stage::Embed, lang)?;
        let vectors = if paragraphs.is_empty() {
            Vec::new()
        } else {
            embed_batch(&paragraphs, &provider).map_err(provider_error)?
        };
        let path = c.out_dir.join(artifacts::embeddings(lang.code()));
        let mut w = create(&path)?;
        write_vectors(&mut w, &vectors).map_err(|e| PipelineError::stage(Stage::Embed, e))?;
        w.flush().map_err(|e| PipelineError::io(&path, e))?;
    }
    Ok(())
}

fn run_cluster(c: &PipelineConfig) -> Result<(), PipelineError> {
    let params = c.cluster_params();
    for lang in LANGUAGES {
        let path = c.out_dir.join(artifacts::embeddings(lang.code()));
        let vectors = read_vectors(open(&path)?).map_err(|e| PipelineError::stage(Stage::Cluster, e))?;
        let ids: Vec<String> = vectors.iter().map(|v| v.id.clone()).collect();
        let points = vectors
            .iter()
            .map(|v| normalize(v).map(|n| n.values))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PipelineError::stage(Stage::Cluster, e))?;
        let (clustering, tree) = if points.is_empty() {
            (Clustering::from_labels(&[]), None)
        } else {
            let (c, t) = cluster(&points, &params).map_err(|e| PipelineError::stage(Stage::Cluster, format!("{lang:?}: {e}")))?;
            (c, Some(t))
        };
        log::info!(
            "cluster {}: {} clusters, {} outliers",
            lang.code(),
            clustering.cluster_count,
            clustering.outlier_count
        );
        write_with(&c.out_dir.join(artifacts::clusters(lang.code())), |w| {
            write_clustering(w, &ids, &clustering, &params)
        })?;
        write_with(&c.out_dir.join(artifacts::condensed_tree(lang.code())), |w| match &tree {
            Some(t) => t.write_tsv(w),
            None => writeln!(w, "parent\tchild\tlambda\tsize"),
        })?;
    }
    Ok(())
}

fn represent_config(c: &PipelineConfig) -> Result<RepresentConfig, PipelineError> {
    let config_err = |p: &Path, e: &dyn std::fmt::Display| PipelineError::Config(format!("{}: {e}", p.display()));
    let tokenizer = match &c.stopwords {
        Some(p) => Tokenizer::with_stopwords(parse_word_list(open(p)?).map_err(|e| config_err(p, &e))?),
        None => Tokenizer::default(),
    };
    let lexicon = match lexicon(c) {
        Some(p) => PosLexicon::from_path(&p).map_err(|e| config_err(&p, &e))?,
        None => PosLexicon::shipped(),
    };
    Ok(RepresentConfig {
        tokenizer,
        lexicon,
        lda: c.lda_params(),
        top_n: c.top_n,
    })
}

fn run_represent(c: &PipelineConfig) -> Result<(), PipelineError> {
    let config = represent_config(c)?;
    let dict = match dictionary(c) {
        Some(p) => EnrichedDictionary::from_path(&p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?,
        None => EnrichedDictionary::shipped(),
    };
    let mut sample = serde_json::Map::new();
    for lang in LANGUAGES {
        let paragraphs = load_paragraphs(c, Stage::Represent, lang)?;
        let path = c.out_dir.join(artifacts::clusters(lang.code()));
        let (ids, clustering) = read_clustering(open(&path)?).map_err(|e| PipelineError::stage(Stage::Represent, e))?;
        if ids.len() != paragraphs.len() || ids.iter().zip(&paragraphs).any(|(id, p)| *id != p.id()) {
            return Err(PipelineError::stage(
                Stage::Represent,
                format!("{} does not match the ingested paragraphs; rerun cluster", path.display()),
            ));
        }
        let clusters = represent_clusters(&paragraphs, &clustering, lang, &config)
            .map_err(|e| PipelineError::stage(Stage::Represent, e))?;
        let clusters = filter_clusters(&clusters, &dict, c.keyword_unrecognized);
        log::info!(
            "represent {}: {} of {} clusters kept",
            lang.code(),
            clusters.iter().filter(|t| t.kept).count(),
            clusters.len()
        );
        sample.insert(
            lang.code().to_string(),
            json!(review_sample(&clusters, c.review_fraction, c.seed)),
        );
        write_json(&c.out_dir.join(artifacts::topic_clusters(lang.code())), &clusters)?;
        write_with(&c.out_dir.join(artifacts::cluster_report(lang.code())), |w| {
            write_cluster_report(w, &clusters)
        })?;
    }
    write_json(&c.out_dir.join(artifacts::REVIEW_SAMPLE), &sample)
}

fn kept(clusters: Vec<TopicCluster>) -> Vec<TopicCluster> {
    clusters.into_iter().filter(|c| c.kept).collect()
}

fn run_compare(c: &PipelineConfig) -> Result<(), PipelineError> {
    let ru = kept(load_topics(c, Stage::Compare, Language::Russian)?);
    let en = kept(load_topics(c, Stage::Compare, Language::English)?);
    let report = compare_all(&ru, &en, &c.thresholds()).map_err(|e| PipelineError::stage(Stage::Compare, e))?;
    let out = &c.out_dir;
    write_with(&out.join(artifacts::PAIRS), |w| report.write_pairs(w))?;
    write_with(&out.join(artifacts::HISTOGRAM), |w| report.write_histogram(w))?;
    write_with(&out.join(artifacts::TOPICS), |w| report.write_topics(w))?;
    write_json(&out.join(artifacts::RELATEDNESS), &report)
}

fn run_jargon(c: &PipelineConfig) -> Result<(), PipelineError> {
    let mut clusters = load_topics(c, Stage::Jargon, Language::Russian)?;
    clusters.extend(load_topics(c, Stage::Jargon, Language::English)?);
    let glossaries = glossaries(c)
        .iter()
        .map(|p| parse_word_list(open(p)?).map_err(|e| PipelineError::io(p, e)))
        .collect::<Result<Vec<HashSet<String>>, _>>()?;
    let candidates = extract_jargon(&clusters, &glossaries);
    log::info!("jargon: {} candidates", candidates.len());
    write_with(&c.out_dir.join(artifacts::JARGON_TSV), |w| write_jargon_report(w, &candidates))?;
    write_json(&c.out_dir.join(artifacts::JARGON_JSON), &candidates)
}

fn run_eval(c: &PipelineConfig) -> Result<(), PipelineError> {
    let mut paragraphs = load_paragraphs(c, Stage::Eval, Language::English)?;
    paragraphs.extend(load_paragraphs(c, Stage::Eval, Language::Russian)?);
    let providers = c.eval_provider_configs()?;
    let summaries = compare_models(&paragraphs, &providers, &c.cluster_params(), c.eval_runs)
        .map_err(|e| PipelineError::stage(Stage::Eval, e))?;
    write_with(&c.out_dir.join(artifacts::EVAL_TSV), |w| write_model_report(w, &summaries))?;
    write_json(&c.out_dir.join(artifacts::EVAL_JSON), &summaries)?;
    if summaries.iter().all(|s| s.failed.is_some()) {
        let reasons: Vec<String> = summaries
            .iter()
            .map(|s| format!("{}: {}", s.provider, s.failed.as_deref().unwrap_or_default()))
            .collect();
        return Err(PipelineError::Provider(reasons.join("; ")));
    }
    Ok(())
}

fn run_report(c: &PipelineConfig) -> Result<(), PipelineError> {
    let report: RelatednessReport = read_json(Stage::Report, &c.out_dir.join(artifacts::RELATEDNESS))?;
    let ru = load_topics(c, Stage::Report, Language::Russian)?;
    let en = load_topics(c, Stage::Report, Language::English)?;
    let jargon_path = c.out_dir.join(artifacts::JARGON_JSON);
    let jargon: Option<Vec<crate::compare::JargonCandidate>> = if jargon_path.exists() {
        Some(read_json(Stage::Report, &jargon_path)?)
    } else {
        None
    };
    let text = render_report(&report, &ru, &en, jargon.as_deref());
    write_with(&c.out_dir.join(artifacts::REPORT), |w| w.write_all(text.as_bytes()))
}
