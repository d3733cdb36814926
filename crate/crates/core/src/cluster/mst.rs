//! Core distances and the minimum spanning tree of the complete
//! mutual-reachability graph.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::ClusterError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    /// Smaller endpoint index.
    pub a: usize,
    /// Larger endpoint index.
    pub b: usize,
    pub weight: f64,
}

impl MstEdge {
    pub fn new(u: usize, v: usize, weight: f64) -> Self {
        Self {
            a: u.min(v),
            b: u.max(v),
            weight,
        }
    }

    /// Total order used for every tie: weight, then smaller index, then
    /// larger index.
    pub fn key_cmp(&self, other: &Self) -> Ordering {
        edge_key_cmp((self.weight, self.a, self.b), (other.weight, other.a, other.b))
    }
}

fn edge_key_cmp(x: (f64, usize, usize), y: (f64, usize, usize)) -> Ordering {
    x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2))
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance from each point to its `k`-th nearest neighbour, counting the
/// point itself as the first.
pub fn core_distances(points: &[Vec<f64>], k: usize) -> Result<Vec<f64>, ClusterError> {
    if k == 0 {
        return Err(ClusterError::InvalidParams("min_samples must be positive".into()));
    }
    if points.len() < k {
        return Err(ClusterError::TooFewPoints {
            points: points.len(),
            required: k,
        });
    }
    if k == 1 {
        return Ok(vec![0.0; points.len()]);
    }
    Ok((0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| euclidean(&points[i], q))
                .collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 2, f64::total_cmp);
            *kth
        })
        .collect())
}

pub fn mutual_reachability(distance: f64, core_a: f64, core_b: f64) -> f64 {
    distance.max(core_a).max(core_b)
}

/// Prim's algorithm over the complete mutual-reachability graph, computing
/// edge weights on the fly. O(n^2) time, O(n) extra memory. Returns the
/// n-1 edges sorted by the (weight, a, b) key.
pub fn mutual_reachability_mst(points: &[Vec<f64>], core: &[f64]) -> Vec<MstEdge> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    // (weight, source) of the best known connection of each vertex to the tree
    let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0usize;
    in_tree[0] = true;

    for _ in 1..n {
        let cur_point = &points[current];
        let cur_core = core[current];
        best.par_iter_mut()
            .zip(in_tree.par_iter())
            .enumerate()
            .for_each(|(v, (slot, &done))| {
                if done {
                    return;
                }
                let w = mutual_reachability(euclidean(cur_point, &points[v]), cur_core, core[v]);
                let candidate = (w, current.min(v), current.max(v));
                let better = slot.1 == usize::MAX
                    || edge_key_cmp(candidate, (slot.0, slot.1.min(v), slot.1.max(v))) == Ordering::Less;
                if better {
                    *slot = (w, current);
                }
            });

        let next = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&u, &v| {
                let (wu, su) = best[u];
                let (wv, sv) = best[v];
                edge_key_cmp((wu, su.min(u), su.max(u)), (wv, sv.min(v), sv.max(v)))
            })
            .expect("a vertex remains outside the tree");
        let (w, src) = best[next];
        edges.push(MstEdge::new(src, next, w));
        in_tree[next] = true;
        current = next;
    }
    edges.sort_by(MstEdge::key_cmp);
    edges
}
