//! Per-cluster LDA keywords.
//!
//! With a single topic every token is forced into that topic, so the
//! collapsed posterior of the topic-word distribution is closed-form:
//! `phi_w = (n_w + beta) / (N + V * beta)`. That path is computed exactly.
//! More topics fall back to collapsed Gibbs sampling.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TopicError;

pub const DEFAULT_TOP_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub topic_count: usize,
    pub beta: f64,
    /// Document-topic smoothing; `None` means `50 / topic_count`.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self {
            topic_count: 1,
            beta: 0.01,
            alpha: None,
            iterations: 500,
            seed: 0,
        }
    }
}

impl LdaParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topic_count as f64)
    }

    fn validate(&self) -> Result<(), TopicError> {
        if self.topic_count == 0 {
            return Err(TopicError::InvalidParams("topic_count must be positive".into()));
        }
        if !(self.beta > 0.0) || !(self.alpha() > 0.0) {
            return Err(TopicError::InvalidParams("alpha and beta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub word: String,
    pub weight: f64,
}

/// Term counts over all documents.
pub fn term_counts(docs: &[Vec<String>]) -> BTreeMap<&str, u64> {
    let mut counts = BTreeMap::new();
    for doc in docs {
        for t in doc {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

/// Full single-topic distribution over the cluster vocabulary, ranked by
/// weight descending with ties broken by word ascending.
pub fn single_topic_distribution(docs: &[Vec<String>], beta: f64) -> Result<Vec<Keyword>, TopicError> {
    let counts = term_counts(docs);
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(TopicError::EmptyCluster);
    }
    let denom = total as f64 + counts.len() as f64 * beta;
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    // phi is strictly increasing in the count, so rank on the integer count
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Ok(ranked
        .into_iter()
        .map(|(w, n)| Keyword {
            word: w.to_string(),
            weight: (n as f64 + beta) / denom,
        })
        .collect())
}

/// Top `top_n` keywords of the cluster. For more than one topic the
/// keywords of the topic holding the most tokens are returned.
pub fn lda_keywords(docs: &[Vec<String>], params: &LdaParams, top_n: usize) -> Result<Vec<Keyword>, TopicError> {
    params.validate()?;
    let mut ranked = if params.topic_count == 1 {
        single_topic_distribution(docs, params.beta)?
    } else {
        gibbs_dominant_topic(docs, params)?
    };
    ranked.truncate(top_n);
    Ok(ranked)
}

fn gibbs_dominant_topic(docs: &[Vec<String>], params: &LdaParams) -> Result<Vec<Keyword>, TopicError> {
    let k = params.topic_count;
    let alpha = params.alpha();
    let beta = params.beta;

    let mut vocab: Vec<&str> = docs.iter().flatten().map(String::as_str).collect();
    vocab.sort_unstable();
    vocab.dedup();
    if vocab.is_empty() {
        return Err(TopicError::EmptyCluster);
    }
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, w)| (*w, i)).collect();
    let v = vocab.len();
    let words: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().map(|t| index[t.as_str()]).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut topic_word = vec![vec![0u64; v]; k];
    let mut topic_total = vec![0u64; k];
    let mut doc_topic = vec![vec![0u64; k]; docs.len()];
    let mut assign: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, doc) in words.iter().enumerate() {
        let mut z = Vec::with_capacity(doc.len());
        for &w in doc {
            let t = rng.gen_range(0..k);
            topic_word[t][w] += 1;
            topic_total[t] += 1;
            doc_topic[d][t] += 1;
            z.push(t);
        }
        assign.push(z);
    }

    let vbeta = v as f64 * beta;
    let mut weights = vec![0.0; k];
    for _ in 0..params.iterations {
        for (d, doc) in words.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = assign[d][i];
                topic_word[old][w] -= 1;
                topic_total[old] -= 1;
                doc_topic[d][old] -= 1;
                let mut sum = 0.0;
                for t in 0..k {
                    let p = (doc_topic[d][t] as f64 + alpha) * (topic_word[t][w] as f64 + beta)
                        / (topic_total[t] as f64 + vbeta);
                    sum += p;
                    weights[t] = sum;
                }
                let u = rng.gen::<f64>() * sum;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
                assign[d][i] = new;
                topic_word[new][w] += 1;
                topic_total[new] += 1;
                doc_topic[d][new] += 1;
            }
        }
    }

    let dominant = (0..k)
        .max_by(|&a, &b| topic_total[a].cmp(&topic_total[b]).then(b.cmp(&a)))
        .expect("at least one topic");
    let denom = topic_total[dominant] as f64 + vbeta;
    let mut ranked: Vec<(usize, u64)> = topic_word[dominant].iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(vocab[a.0].cmp(vocab[b.0])));
    Ok(ranked
        .into_iter()
        .map(|(w, n)| Keyword {
            word: vocab[w].to_string(),
            weight: (n as f64 + beta) / denom,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts
            .iter()
            .map(|t| t.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn closed_form_example() {
        let params = LdaParams {
            beta: 0.1,
            ..Default::default()
        };
        let kw = lda_keywords(&docs(&["cat cat dog", "cat fish"]), &params, 2).unwrap();
        assert_eq!(kw.len(), 2);
        assert_eq!(kw[0].word, "cat");
        assert_eq!(kw[1].word, "dog");
        assert!((kw[0].weight - 3.1 / 5.3).abs() < 1e-12);
        assert!((kw[1].weight - 1.1 / 5.3).abs() < 1e-12);
    }

    #[test]
    fn single_word_vocabulary_has_weight_one() {
        let kw = lda_keywords(&docs(&["x x x"]), &LdaParams::default(), 1).unwrap();
        assert_eq!(kw[0].word, "x");
        assert!((kw[0].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_cluster_is_an_error() {
        assert!(matches!(
            lda_keywords(&docs(&["", ""]), &LdaParams::default(), 20),
            Err(TopicError::EmptyCluster)
        ));
    }

    #[test]
    fn seed_and_iterations_do_not_matter_for_one_topic() {
        let d = docs(&["alpha beta beta gamma", "beta delta alpha"]);
        let a = lda_keywords(&d, &LdaParams::default(), 20).unwrap();
        let b = lda_keywords(
            &d,
            &LdaParams {
                seed: 99,
                iterations: 3,
                ..Default::default()
            },
            20,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gibbs_separates_two_disjoint_vocabularies() {
        let mut texts = Vec::new();
        for _ in 0..30 {
            texts.push("apple banana cherry apple banana");
        }
        for _ in 0..10 {
            texts.push("router switch packet router");
        }
        let params = LdaParams {
            topic_count: 2,
            alpha: Some(0.1),
            iterations: 100,
            seed: 3,
            ..Default::default()
        };
        let kw = lda_keywords(&docs(&texts), &params, 3).unwrap();
        let words: Vec<_> = kw.iter().map(|k| k.word.as_str()).collect();
        assert_eq!(words, ["apple", "banana", "cherry"]);
        let again = lda_keywords(&docs(&texts), &params, 3).unwrap();
        assert_eq!(kw, again);
    }

    #[test]
    fn rejects_bad_params() {
        let params = LdaParams {
            beta: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            lda_keywords(&docs(&["a b"]), &params, 1),
            Err(TopicError::InvalidParams(_))
        ));
    }
}
