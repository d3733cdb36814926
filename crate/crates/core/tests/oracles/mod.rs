//! Brute-force reference implementations shared by the test targets.

#![allow(dead_code)]

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// k-th smallest distance with the point itself counted first.
pub fn brute_core(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            let mut d: Vec<f64> = points.iter().map(|q| dist(p, q)).collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .collect()
}

pub fn mreach_matrix(points: &[Vec<f64>], core: &[f64]) -> Vec<Vec<f64>> {
    let n = points.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| core[i].max(core[j]).max(dist(&points[i], &points[j])))
                .collect()
        })
        .collect()
}

/// Minimum total weight over every labelled tree, enumerated as Prüfer
/// sequences.
pub fn enumerate_min_tree(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    if n == 1 {
        return 0.0;
    }
    if n == 2 {
        return w[0][1];
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut best = f64::INFINITY;
    loop {
        let mut degree = vec![1usize; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut total = 0.0;
        for &s in &seq {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            total += w[leaf][s];
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        total += w[rest[0]][rest[1]];
        best = best.min(total);

        let mut i = 0;
        loop {
            if i == len {
                return best;
            }
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
    }
}

pub fn kruskal_min_tree(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((w[i][j], i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut total = 0.0;
    for (wt, a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            total += wt;
        }
    }
    total
}

/// Minimum spanning weight: exhaustive enumeration up to eight points,
/// Kruskal beyond.
pub fn min_tree_weight(w: &[Vec<f64>]) -> f64 {
    if w.len() <= 8 {
        enumerate_min_tree(w)
    } else {
        kruskal_min_tree(w)
    }
}

/// Rand index by direct pair counting; negative labels never share a class.
pub fn pair_count_rand(a: &[i64], b: &[i64]) -> f64 {
    let n = a.len();
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let same_a = a[i] >= 0 && a[i] == a[j];
            let same_b = b[i] >= 0 && b[i] == b[j];
            agree += (same_a == same_b) as u64;
            total += 1;
        }
    }
    agree as f64 / total as f64
}

/// Keywords ranked by raw count, ties by word ascending.
pub fn term_frequency_ranking(docs: &[Vec<String>]) -> Vec<(String, u64)> {
    let mut counts: std::collections::HashMap<&str, u64> = std::collections::HashMap::new();
    for d in docs {
        for t in d {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut v: Vec<(String, u64)> = counts.into_iter().map(|(w, c)| (w.to_string(), c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}
