//! Hierarchical density-based clustering (HDBSCAN) over Euclidean space.
//!
//! The pipeline is the classical one: core distances, the minimum spanning
//! tree of the mutual-reachability graph, a single-linkage dendrogram, the
//! condensed tree pruned at `min_cluster_size`, and excess-of-mass
//! selection of the most stable clusters. Points outside every selected
//! cluster are outliers (label `-1`).
//!
//! Everything is deterministic: equal-weight edges are ordered by
//! `(weight, smaller index, larger index)` and cluster labels follow the
//! input order of each cluster's first member.

mod mst;
mod tree;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use mst::{core_distances, euclidean, mutual_reachability, mutual_reachability_mst, MstEdge};
pub use tree::{
    condense, lambda_of, select_clusters, single_linkage, stabilities, CondensedRow, CondensedTree,
    Merge,
};

pub const OUTLIER: i64 = -1;
pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 24;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClusterError {
    #[error("{points} point(s) given but at least {required} are needed")]
    TooFewPoints { points: usize, required: usize },
    #[error("invalid cluster parameters: {0}")]
    InvalidParams(String),
    #[error("point {index} has dimension {actual}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("clustering file line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    /// Neighbour count for core distances; `None` means `min_cluster_size`.
    #[serde(default)]
    pub min_samples: Option<usize>,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
            min_samples: None,
        }
    }
}

impl ClusterParams {
    pub fn new(min_cluster_size: usize) -> Self {
        Self {
            min_cluster_size,
            min_samples: None,
        }
    }

    pub fn min_samples(&self) -> usize {
        self.min_samples.unwrap_or(self.min_cluster_size)
    }

    fn validate(&self, points: usize) -> Result<(), ClusterError> {
        if self.min_cluster_size < 2 {
            return Err(ClusterError::InvalidParams("min_cluster_size must be at least 2".into()));
        }
        if self.min_samples() == 0 {
            return Err(ClusterError::InvalidParams("min_samples must be positive".into()));
        }
        let required = self.min_cluster_size.max(self.min_samples());
        if points < required {
            return Err(ClusterError::TooFewPoints { points, required });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    pub labels: Vec<i64>,
    pub cluster_count: usize,
    pub outlier_count: usize,
}

impl Clustering {
    /// Builds a clustering from raw labels, renumbering clusters 0..K-1 in
    /// order of first appearance. Negative labels become outliers.
    pub fn from_labels(raw: &[i64]) -> Self {
        let mut map: BTreeMap<i64, i64> = BTreeMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &l in raw {
            if l < 0 {
                labels.push(OUTLIER);
            } else {
                let next = map.len() as i64;
                labels.push(*map.entry(l).or_insert(next));
            }
        }
        let outlier_count = labels.iter().filter(|&&l| l == OUTLIER).count();
        Self {
            labels,
            cluster_count: map.len(),
            outlier_count,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Member indices of each cluster, indexed by label.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                out[l as usize].push(i);
            }
        }
        out
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<(), ClusterError> {
    let expected = points.first().map(Vec::len).unwrap_or(0);
    for (index, p) in points.iter().enumerate() {
        if p.len() != expected {
            return Err(ClusterError::DimensionMismatch {
                index,
                expected,
                actual: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(ClusterError::NonFinite(index));
        }
    }
    Ok(())
}

/// Clusters `points` and returns the flat labelling with its condensed tree.
pub fn cluster(
    points: &[Vec<f64>],
    params: &ClusterParams,
) -> Result<(Clustering, CondensedTree), ClusterError> {
    params.validate(points.len())?;
    check_points(points)?;
    let n = points.len();

    let core = core_distances(points, params.min_samples())?;
    let edges = mutual_reachability_mst(points, &core);
    let merges = single_linkage(n, &edges);
    let mut tree = condense(n, &merges, params.min_cluster_size);
    tree.selected = select_clusters(&tree);

    // parent cluster of every condensed node
    let mut parent_of = vec![usize::MAX; n + tree.stabilities.len() + 1];
    for r in &tree.rows {
        parent_of[r.child] = r.parent;
    }
    let mut is_selected = vec![false; parent_of.len()];
    for &c in &tree.selected {
        is_selected[c] = true;
    }
    let root = tree.root();
    let raw: Vec<i64> = (0..n)
        .map(|p| {
            let mut node = parent_of[p];
            while node != usize::MAX && node != root {
                if is_selected[node] {
                    return node as i64;
                }
                node = parent_of[node];
            }
            OUTLIER
        })
        .collect();
    Ok((Clustering::from_labels(&raw), tree))
}

/// Writes `id<TAB>label` records under a `#` header carrying the
/// parameters and cluster count.
pub fn write_clustering<W: Write>(
    mut w: W,
    ids: &[String],
    clustering: &Clustering,
    params: &ClusterParams,
) -> std::io::Result<()> {
    writeln!(
        w,
        "# min_cluster_size={} min_samples={} metric=euclidean clusters={} outliers={}",
        params.min_cluster_size,
        params.min_samples(),
        clustering.cluster_count,
        clustering.outlier_count
    )?;
    for (id, label) in ids.iter().zip(&clustering.labels) {
        writeln!(w, "{id}\t{label}")?;
    }
    Ok(())
}

pub fn read_clustering<R: BufRead>(r: R) -> Result<(Vec<String>, Clustering), ClusterError> {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| ClusterError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (id, label) = line.split_once('\t').ok_or_else(|| ClusterError::Parse {
            line: i + 1,
            message: "expected id<TAB>label".into(),
        })?;
        ids.push(id.to_string());
        labels.push(label.trim().parse::<i64>().map_err(|e| ClusterError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok((ids, Clustering::from_labels(&labels)))
}
