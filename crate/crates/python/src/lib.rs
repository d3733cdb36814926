//! Python bindings: the text filters, embedder, clustering, keyword and
//! comparison primitives, the synthetic corpus generator, and the staged
//! pipeline.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pocketlens::cluster::{self as hdbscan, ClusterParams};
use pocketlens::compare::{self, Relatedness, Thresholds};
use pocketlens::embed;
use pocketlens::eval;
use pocketlens::ingest;
use pocketlens::pipeline::{self, PipelineConfig, Stage, StageOutcome};
use pocketlens::synth::{self, PlantedJargon, SynthSpec};
use pocketlens::topic::{self, LdaParams};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Lowercased word tokens with stop words removed.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    topic::tokenize(text)
}

/// "en", "ru" or "other", by dominant script.
#[pyfunction]
fn detect_language(text: &str) -> &'static str {
    ingest::detect_language(text).code()
}

#[pyfunction]
fn symbol_ratio(text: &str) -> f64 {
    ingest::symbol_ratio(text)
}

/// True when the share of symbol characters exceeds `threshold`.
#[pyfunction]
#[pyo3(signature = (text, threshold = ingest::DEFAULT_NOISE_RATIO))]
fn is_nonconversational(text: &str, threshold: f64) -> bool {
    ingest::exceeds_symbol_ratio(text, threshold)
}

#[pyfunction]
#[pyo3(signature = (text, dimension, seed = 0))]
fn hash_embed(text: &str, dimension: usize, seed: u64) -> PyResult<Vec<f64>> {
    embed::hash_embed(text, dimension, seed).map_err(value_err)
}

#[pyfunction]
fn cosine(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    if a.len() != b.len() {
        return Err(value_err(format!("dimensions differ: {} vs {}", a.len(), b.len())));
    }
    Ok(embed::cosine(&a, &b))
}

/// Flat HDBSCAN labelling of a point set.
#[pyclass(get_all, frozen)]
struct Clustering {
    labels: Vec<i64>,
    cluster_count: usize,
    outlier_count: usize,
}

#[pymethods]
impl Clustering {
    fn __repr__(&self) -> String {
        format!(
            "Clustering(clusters={}, outliers={}, points={})",
            self.cluster_count,
            self.outlier_count,
            self.labels.len()
        )
    }

    fn __len__(&self) -> usize {
        self.labels.len()
    }
}

/// Clusters `points` (Euclidean); outliers are labelled -1.
#[pyfunction]
#[pyo3(signature = (points, min_cluster_size = hdbscan::DEFAULT_MIN_CLUSTER_SIZE, min_samples = None))]
fn cluster(points: Vec<Vec<f64>>, min_cluster_size: usize, min_samples: Option<usize>) -> PyResult<Clustering> {
    let params = ClusterParams {
        min_cluster_size,
        min_samples,
    };
    let (c, _) = hdbscan::cluster(&points, &params).map_err(value_err)?;
    Ok(Clustering {
        labels: c.labels,
        cluster_count: c.cluster_count,
        outlier_count: c.outlier_count,
    })
}

/// Top keywords of a cluster given as tokenized documents, as
/// `(word, weight)` pairs.
#[pyfunction]
#[pyo3(signature = (docs, top_n = topic::DEFAULT_TOP_N, beta = 0.01, topics = 1, seed = 0))]
fn lda_keywords(
    docs: Vec<Vec<String>>,
    top_n: usize,
    beta: f64,
    topics: usize,
    seed: u64,
) -> PyResult<Vec<(String, f64)>> {
    let params = LdaParams {
        topic_count: topics,
        beta,
        seed,
        ..LdaParams::default()
    };
    let keywords = topic::lda_keywords(&docs, &params, top_n).map_err(value_err)?;
    Ok(keywords.into_iter().map(|k| (k.word, k.weight)).collect())
}

/// Binary cosine of two keyword sets.
#[pyfunction]
fn keyword_cosine(a: Vec<String>, b: Vec<String>) -> PyResult<f64> {
    let score = compare::keyword_cosine(a.iter().map(String::as_str), b.iter().map(String::as_str))
        .map_err(value_err)?;
    Ok(score.value())
}

fn level_name(r: Relatedness) -> &'static str {
    match r {
        Relatedness::HighlyRelated => "highly_related",
        Relatedness::SomewhatRelated => "somewhat_related",
        Relatedness::NotRelated => "not_related",
    }
}

/// "highly_related", "somewhat_related" or "not_related".
#[pyfunction]
#[pyo3(signature = (score, high = compare::DEFAULT_HIGH_THRESHOLD, low = compare::DEFAULT_LOW_THRESHOLD))]
fn classify(score: f64, high: f64, low: f64) -> PyResult<&'static str> {
    compare::classify_with(score, &Thresholds { high, low })
        .map(level_name)
        .map_err(value_err)
}

#[pyfunction]
fn rand_index(a: Vec<i64>, b: Vec<i64>) -> PyResult<f64> {
    eval::rand_index(&a, &b).map_err(value_err)
}

#[pyfunction]
fn adjusted_rand_index(a: Vec<i64>, b: Vec<i64>) -> PyResult<f64> {
    eval::adjusted_rand_index(&a, &b).map_err(value_err)
}

/// Writes a synthetic corpus and its sidecar files into `directory` and
/// returns the written paths.
#[pyfunction]
#[pyo3(signature = (
    directory,
    shared_topics = 2,
    unique_russian = 1,
    unique_english = 1,
    docs_per_topic = 50,
    noise_fraction = 0.0,
    jargon = Vec::new(),
    seed = 0,
))]
#[allow(clippy::too_many_arguments)]
fn generate_synth(
    directory: PathBuf,
    shared_topics: usize,
    unique_russian: usize,
    unique_english: usize,
    docs_per_topic: usize,
    noise_fraction: f64,
    jargon: Vec<(String, usize)>,
    seed: u64,
) -> PyResult<Vec<PathBuf>> {
    let spec = SynthSpec {
        shared_topic_count: shared_topics,
        unique_russian_count: unique_russian,
        unique_english_count: unique_english,
        docs_per_topic,
        noise_fraction,
        jargon_terms: jargon
            .into_iter()
            .map(|(term, host_topic)| PlantedJargon { term, host_topic })
            .collect(),
        seed,
        ..SynthSpec::default()
    };
    let corpus = synth::generate(&spec).map_err(value_err)?;
    corpus.write_to_dir(&directory).map_err(runtime_err)
}

/// A staged run over one output directory. The directory stays locked
/// until the object is closed or collected.
#[pyclass]
struct Pipeline {
    inner: Option<pipeline::Pipeline>,
}

impl Pipeline {
    fn get(&self) -> PyResult<&pipeline::Pipeline> {
        self.inner.as_ref().ok_or_else(|| runtime_err("pipeline is closed"))
    }
}

fn pipeline_err(e: pipeline::PipelineError) -> PyErr {
    let code = e.exit_code();
    runtime_err(format!("{e} (exit code {code})"))
}

#[pymethods]
impl Pipeline {
    /// `config` is the flat key = value text of a config file.
    #[new]
    #[pyo3(signature = (out_dir, config = "", force = false))]
    fn new(out_dir: PathBuf, config: &str, force: bool) -> PyResult<Self> {
        let mut cfg = PipelineConfig::from_toml(config).map_err(value_err)?;
        cfg.out_dir = out_dir;
        let inner = pipeline::Pipeline::open(cfg, force).map_err(pipeline_err)?;
        Ok(Self { inner: Some(inner) })
    }

    /// Runs one stage; returns False when it was already up to date.
    fn run_stage(&self, stage: &str) -> PyResult<bool> {
        let stage: Stage = stage.parse().map_err(value_err)?;
        let outcome = self.get()?.run_stage(stage).map_err(pipeline_err)?;
        Ok(!outcome.was_skipped())
    }

    /// Runs every stage; returns the names of the stages that ran.
    #[pyo3(signature = (eval = false))]
    fn run_all(&self, eval: bool) -> PyResult<Vec<String>> {
        let outcomes = self.get()?.run_all(eval).map_err(pipeline_err)?;
        Ok(outcomes
            .into_iter()
            .filter_map(|o| match o {
                StageOutcome::Ran(m) => Some(m.stage),
                StageOutcome::Skipped(_) => None,
            })
            .collect())
    }

    /// The rendered report, once the report stage has run.
    fn report(&self) -> PyResult<String> {
        let path = self.get()?.out_dir().join(pipeline::artifacts::REPORT);
        std::fs::read_to_string(&path).map_err(|e| runtime_err(format!("{}: {e}", path.display())))
    }

    /// Releases the directory lock.
    fn close(&mut self) {
        self.inner = None;
    }
}

#[pymodule]
fn pocketlens_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(detect_language, m)?)?;
    m.add_function(wrap_pyfunction!(symbol_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(is_nonconversational, m)?)?;
    m.add_function(wrap_pyfunction!(hash_embed, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(lda_keywords, m)?)?;
    m.add_function(wrap_pyfunction!(keyword_cosine, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synth, m)?)?;
    m.add_class::<Clustering>()?;
    m.add_class::<Pipeline>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
