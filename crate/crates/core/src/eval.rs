//! Clustering agreement and the repeated-run embedding model comparison.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster, ClusterParams, Clustering};
use crate::embed::{embed_batch, normalize, ProviderConfig};
use crate::ingest::Paragraph;

pub const DEFAULT_RUNS: usize = 5;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("labelings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("need at least two runs, got {0}")]
    TooFewRuns(usize),
}

/// Class key per point: the label itself for cluster members, and a
/// distinct negative key for each outlier so outliers act as singletons.
fn class_keys(labels: &[i64]) -> Vec<i64> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| if l < 0 { -1 - i as i64 } else { l })
        .collect()
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Sum of C(run, 2) over runs of equal values in a sorted slice.
fn pairs_within_runs<T: Ord>(sorted: &[T]) -> u64 {
    sorted
        .chunk_by(|x, y| x == y)
        .map(|run| pairs(run.len() as u64))
        .sum()
}

struct Contingency {
    n: u64,
    joint: u64,
    rows: u64,
    cols: u64,
}

fn contingency(a: &[i64], b: &[i64]) -> Result<Contingency, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(EvalError::TooFewPoints(a.len()));
    }
    let mut rows = class_keys(a);
    let mut cols = class_keys(b);
    let mut joint: Vec<(i64, i64)> = rows.iter().copied().zip(cols.iter().copied()).collect();
    rows.sort_unstable();
    cols.sort_unstable();
    joint.sort_unstable();
    Ok(Contingency {
        n: a.len() as u64,
        joint: pairs_within_runs(&joint),
        rows: pairs_within_runs(&rows),
        cols: pairs_within_runs(&cols),
    })
}

/// Fraction of point pairs on which two labelings agree.
pub fn rand_index(a: &[i64], b: &[i64]) -> Result<f64, EvalError> {
    let c = contingency(a, b)?;
    let total = pairs(c.n);
    // agreeing = together in both + apart in both
    let agree = c.joint + (total + c.joint - c.rows - c.cols);
    Ok(agree as f64 / total as f64)
}

/// Hubert-Arabie adjusted Rand index with the same outlier treatment.
/// Reported alongside the plain index as a secondary statistic.
pub fn adjusted_rand_index(a: &[i64], b: &[i64]) -> Result<f64, EvalError> {
    let c = contingency(a, b)?;
    let total = pairs(c.n) as f64;
    let expected = c.rows as f64 * c.cols as f64 / total;
    let max = (c.rows as f64 + c.cols as f64) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((c.joint as f64 - expected) / (max - expected))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRunSummary {
    pub provider: String,
    pub runs: usize,
    /// Number of pairwise Rand evaluations, C(runs, 2).
    pub rand_evaluations: usize,
    pub avg_pairwise_rand: f64,
    pub avg_adjusted_rand: f64,
    pub avg_outliers: f64,
    pub avg_clusters: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed: Option<String>,
}

impl ModelRunSummary {
    fn failed(provider: String, runs: usize, message: String) -> Self {
        Self {
            provider,
            runs,
            rand_evaluations: 0,
            avg_pairwise_rand: f64::NAN,
            avg_adjusted_rand: f64::NAN,
            avg_outliers: f64::NAN,
            avg_clusters: f64::NAN,
            failed: Some(message),
        }
    }
}

fn embed_and_cluster(
    paragraphs: &[Paragraph],
    provider: &ProviderConfig,
    params: &ClusterParams,
) -> Result<Clustering, String> {
    let vectors = embed_batch(paragraphs, provider).map_err(|e| e.to_string())?;
    let points = vectors
        .iter()
        .map(|v| normalize(v).map(|n| n.values))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    cluster(&points, params).map(|(c, _)| c).map_err(|e| e.to_string())
}

/// Summarizes a set of clusterings of the same points.
pub fn summarize_runs(provider: &str, clusterings: &[Clustering]) -> Result<ModelRunSummary, EvalError> {
    let runs = clusterings.len();
    if runs < 2 {
        return Err(EvalError::TooFewRuns(runs));
    }
    let mut rand_sum = 0.0;
    let mut ari_sum = 0.0;
    let mut evaluations = 0;
    for i in 0..runs {
        for j in i + 1..runs {
            rand_sum += rand_index(&clusterings[i].labels, &clusterings[j].labels)?;
            ari_sum += adjusted_rand_index(&clusterings[i].labels, &clusterings[j].labels)?;
            evaluations += 1;
        }
    }
    Ok(ModelRunSummary {
        provider: provider.to_string(),
        runs,
        rand_evaluations: evaluations,
        avg_pairwise_rand: rand_sum / evaluations as f64,
        avg_adjusted_rand: ari_sum / evaluations as f64,
        avg_outliers: clusterings.iter().map(|c| c.outlier_count as f64).sum::<f64>() / runs as f64,
        avg_clusters: clusterings.iter().map(|c| c.cluster_count as f64).sum::<f64>() / runs as f64,
        failed: None,
    })
}

/// Embeds and clusters the corpus `runs` times with each provider and
/// reports stability (mean pairwise Rand index), mean outlier count and
/// mean cluster count. A failing provider is reported as failed without
/// affecting the others.
pub fn compare_models(
    paragraphs: &[Paragraph],
    providers: &[ProviderConfig],
    params: &ClusterParams,
    runs: usize,
) -> Result<Vec<ModelRunSummary>, EvalError> {
    if runs < 2 {
        return Err(EvalError::TooFewRuns(runs));
    }
    Ok(providers
        .iter()
        .map(|provider| {
            let name = provider.name();
            let results: Result<Vec<Clustering>, String> = (0..runs)
                .into_par_iter()
                .map(|_| embed_and_cluster(paragraphs, provider, params))
                .collect();
            match results {
                Ok(clusterings) => summarize_runs(&name, &clusterings).expect("runs >= 2"),
                Err(message) => ModelRunSummary::failed(name, runs, message),
            }
        })
        .collect())
}

pub fn write_model_report<W: Write>(mut w: W, summaries: &[ModelRunSummary]) -> std::io::Result<()> {
    writeln!(w, "provider\tavg_rand\tavg_outliers\tavg_clusters\tavg_adjusted_rand\tstatus")?;
    for s in summaries {
        writeln!(
            w,
            "{}\t{:.4}\t{:.1}\t{:.1}\t{:.4}\t{}",
            s.provider,
            s.avg_pairwise_rand,
            s.avg_outliers,
            s.avg_clusters,
            s.avg_adjusted_rand,
            s.failed.as_deref().unwrap_or("ok")
        )?;
    }
    Ok(())
}
