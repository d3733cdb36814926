//! Single-linkage hierarchy, condensed tree, stabilities and
//! excess-of-mass selection.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::mst::MstEdge;

/// Distances below this are treated as equal to it when converting to
/// lambda, keeping stabilities finite for duplicate points.
pub const MIN_DISTANCE: f64 = 1e-12;

pub fn lambda_of(distance: f64) -> f64 {
    1.0 / distance.max(MIN_DISTANCE)
}

/// One merge of the single-linkage dendrogram. Node ids below `n` are
/// points; merge `i` creates node `n + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

/// Builds the dendrogram by replaying MST edges in ascending key order.
pub fn single_linkage(n: usize, sorted_edges: &[MstEdge]) -> Vec<Merge> {
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut size = vec![1usize; 2 * n];
    let mut next = n;

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for e in sorted_edges {
        let ra = find(&mut parent, e.a);
        let rb = find(&mut parent, e.b);
        debug_assert_ne!(ra, rb, "MST edges never close a cycle");
        let merged = size[ra] + size[rb];
        merges.push(Merge {
            left: ra,
            right: rb,
            distance: e.weight,
            size: merged,
        });
        parent[ra] = next;
        parent[rb] = next;
        size[next] = merged;
        next += 1;
    }
    merges
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedRow {
    pub parent: usize,
    pub child: usize,
    pub lambda: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CondensedTree {
    pub point_count: usize,
    pub rows: Vec<CondensedRow>,
    /// Stability of every cluster node, keyed by node id (root = point_count).
    pub stabilities: BTreeMap<usize, f64>,
    /// Cluster nodes chosen by excess-of-mass selection, ascending.
    pub selected: Vec<usize>,
}

impl CondensedTree {
    pub fn root(&self) -> usize {
        self.point_count
    }

    pub fn is_cluster_node(&self, id: usize) -> bool {
        id >= self.point_count
    }

    /// Lambda at which each cluster node appears; the root is born at 0.
    pub fn birth_lambdas(&self) -> BTreeMap<usize, f64> {
        let mut births = BTreeMap::new();
        births.insert(self.root(), 0.0);
        for r in &self.rows {
            if self.is_cluster_node(r.child) {
                births.insert(r.child, r.lambda);
            }
        }
        births
    }

    pub fn write_tsv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "parent\tchild\tlambda\tsize")?;
        for r in &self.rows {
            writeln!(w, "{}\t{}\t{}\t{}", r.parent, r.child, r.lambda, r.size)?;
        }
        Ok(())
    }
}

fn descendants(n: usize, merges: &[Merge], node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut queue = VecDeque::from([node]);
    while let Some(x) = queue.pop_front() {
        out.push(x);
        if x >= n {
            let m = &merges[x - n];
            queue.push_back(m.left);
            queue.push_back(m.right);
        }
    }
    out
}

fn node_size(n: usize, merges: &[Merge], node: usize) -> usize {
    if node < n {
        1
    } else {
        merges[node - n].size
    }
}

/// Subtrees hanging below the maximal group of merges that share `node`'s
/// lambda. Equal-weight merges form one multi-way split, so the result does
/// not depend on the order in which tied edges were replayed.
fn split_children(n: usize, merges: &[Merge], node: usize) -> Vec<usize> {
    let lambda = lambda_of(merges[node - n].distance);
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x >= n && (x == node || lambda_of(merges[x - n].distance) == lambda) {
            let m = &merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        } else {
            out.push(x);
        }
    }
    out
}

/// Walks the dendrogram top-down. At each split (all merges sharing one
/// lambda), children with at least `min_cluster_size` points become new
/// cluster nodes when there are two or more of them, a lone large child
/// continues its parent, and smaller children shed their points ("fall
/// out") at the split's lambda.
pub fn condense(n: usize, merges: &[Merge], min_cluster_size: usize) -> CondensedTree {
    let mut tree = CondensedTree {
        point_count: n,
        ..Default::default()
    };
    if merges.is_empty() {
        return tree;
    }
    let root = n + merges.len() - 1;
    let mut relabel = vec![usize::MAX; 2 * n];
    relabel[root] = n;
    let mut next_label = n + 1;

    let mut queue = VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        let lambda = lambda_of(merges[node - n].distance);
        let parent = relabel[node];
        let children = split_children(n, merges, node);
        let big: Vec<usize> = children
            .iter()
            .copied()
            .filter(|&c| node_size(n, merges, c) >= min_cluster_size)
            .collect();

        for &child in &children {
            if big.contains(&child) {
                continue;
            }
            for sub in descendants(n, merges, child) {
                if sub < n {
                    tree.rows.push(CondensedRow {
                        parent,
                        child: sub,
                        lambda,
                        size: 1,
                    });
                }
            }
        }
        if let [only] = big[..] {
            relabel[only] = parent;
            if only >= n {
                queue.push_back(only);
            }
        } else {
            for child in big {
                let size = node_size(n, merges, child);
                relabel[child] = next_label;
                tree.rows.push(CondensedRow {
                    parent,
                    child: next_label,
                    lambda,
                    size,
                });
                next_label += 1;
                if child >= n {
                    queue.push_back(child);
                }
            }
        }
    }
    tree.stabilities = stabilities(&tree);
    tree
}

/// Stability of cluster C: sum over rows leaving C of
/// (lambda_row - lambda_birth(C)) * row size.
pub fn stabilities(tree: &CondensedTree) -> BTreeMap<usize, f64> {
    let births = tree.birth_lambdas();
    let mut out: BTreeMap<usize, f64> = births.keys().map(|&c| (c, 0.0)).collect();
    for r in &tree.rows {
        let birth = births[&r.parent];
        *out.get_mut(&r.parent).expect("parent is a cluster") += (r.lambda - birth) * r.size as f64;
    }
    out
}

/// Excess-of-mass selection. A non-root node is selected iff its own
/// stability strictly exceeds the summed stability of the best selection
/// among its descendants; selecting it deselects everything below.
pub fn select_clusters(tree: &CondensedTree) -> Vec<usize> {
    let root = tree.root();
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for r in &tree.rows {
        if tree.is_cluster_node(r.child) {
            children.entry(r.parent).or_default().push(r.child);
        }
    }
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    let mut chosen: BTreeMap<usize, bool> = BTreeMap::new();
    // children always carry larger ids than their parents
    for (&node, &stability) in tree.stabilities.iter().rev() {
        let kids = children.get(&node).map(Vec::as_slice).unwrap_or(&[]);
        let subtree: f64 = kids.iter().map(|k| best[k]).sum();
        if node != root && stability > subtree {
            best.insert(node, stability);
            chosen.insert(node, true);
            let mut stack: Vec<usize> = kids.to_vec();
            while let Some(k) = stack.pop() {
                chosen.insert(k, false);
                if let Some(grand) = children.get(&k) {
                    stack.extend(grand);
                }
            }
        } else {
            best.insert(node, subtree);
            chosen.insert(node, false);
        }
    }
    chosen
        .into_iter()
        .filter_map(|(node, is)| is.then_some(node))
        .collect()
}
