//! Cluster representation: a short label and the top LDA keywords for each
//! cluster, plus the dictionary filter that drops clusters whose words are
//! mostly unrecognizable.

mod label;
mod lda;
mod tokenize;

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::Clustering;
use crate::ingest::{Language, Paragraph};
use crate::ratio::Ratio;

pub use label::{label_cluster, PosLexicon, PosTag, MAX_LABEL_WORDS};
pub use lda::{lda_keywords, single_topic_distribution, term_counts, Keyword, LdaParams, DEFAULT_TOP_N};
pub use tokenize::{parse_word_list, tokenize, Tokenizer};

const SHIPPED_DICTIONARY: &str = include_str!("../../data/dictionary_it.txt");

/// Share of unrecognized keywords above which a cluster is dropped.
pub const DEFAULT_KEYWORD_UNRECOGNIZED: f64 = 0.80;
pub const DEFAULT_REVIEW_FRACTION: f64 = 0.10;

#[derive(Debug, thiserror::Error)]
pub enum TopicError {
    #[error("empty cluster: no tokens")]
    EmptyCluster,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("clustering has {labels} labels for {paragraphs} paragraphs")]
    LengthMismatch { labels: usize, paragraphs: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropReason {
    LabelUnrecognized,
    KeywordsUnrecognized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCluster {
    pub cluster_id: usize,
    pub language: Language,
    /// Paragraph ids of the members, in corpus order.
    pub members: Vec<String>,
    pub label_words: Vec<String>,
    pub keywords: Vec<Keyword>,
    pub kept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_reason: Option<DropReason>,
}

impl TopicCluster {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn keyword_words(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(|k| k.word.as_str())
    }
}

/// English vocabulary plus IT terms, matched exactly after lowercasing.
#[derive(Debug, Clone)]
pub struct EnrichedDictionary {
    words: HashSet<String>,
}

impl EnrichedDictionary {
    pub fn new(words: impl IntoIterator<Item = String>) -> Result<Self, TopicError> {
        let words: HashSet<String> = words.into_iter().map(|w| w.to_lowercase()).collect();
        if words.is_empty() {
            return Err(TopicError::EmptyDictionary);
        }
        Ok(Self { words })
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, TopicError> {
        Self::new(parse_word_list(reader)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, TopicError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// The IT-term list shipped with the crate. Real runs should supply a
    /// full English word list merged with it.
    pub fn shipped() -> Self {
        Self::from_reader(SHIPPED_DICTIONARY.as_bytes()).expect("embedded dictionary")
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn extend(&mut self, words: impl IntoIterator<Item = String>) {
        self.words.extend(words.into_iter().map(|w| w.to_lowercase()));
    }
}

/// Marks clusters as dropped when none of their label words are in the
/// dictionary, or when the share of unrecognized keywords strictly exceeds
/// `max_unrecognized`. Labels and keywords are left untouched.
pub fn filter_clusters(
    clusters: &[TopicCluster],
    dict: &EnrichedDictionary,
    max_unrecognized: f64,
) -> Vec<TopicCluster> {
    let limit = Ratio::from_f64(max_unrecognized);
    clusters
        .iter()
        .map(|c| {
            let mut c = c.clone();
            let label_hit = c.label_words.iter().any(|w| dict.contains(w));
            let unrecognized = c.keyword_words().filter(|w| !dict.contains(w)).count();
            c.drop_reason = if !label_hit {
                Some(DropReason::LabelUnrecognized)
            } else if limit.is_exceeded_by(unrecognized as u64, c.keywords.len() as u64) {
                Some(DropReason::KeywordsUnrecognized)
            } else {
                None
            };
            c.kept = c.drop_reason.is_none();
            c
        })
        .collect()
}

/// Settings for turning clusters into labelled keyword sets.
#[derive(Debug, Clone)]
pub struct RepresentConfig {
    pub tokenizer: Tokenizer,
    pub lexicon: PosLexicon,
    pub lda: LdaParams,
    pub top_n: usize,
}

impl Default for RepresentConfig {
    fn default() -> Self {
        Self {
            tokenizer: Tokenizer::default(),
            lexicon: PosLexicon::shipped(),
            lda: LdaParams::default(),
            top_n: DEFAULT_TOP_N,
        }
    }
}

/// Labels and keywords every cluster of one language corpus. Clusters that
/// yield no tokens are returned dropped with empty content. With more than
/// one LDA topic the sampler is seeded with `seed ^ cluster_id`.
pub fn represent_clusters(
    paragraphs: &[Paragraph],
    clustering: &Clustering,
    language: Language,
    config: &RepresentConfig,
) -> Result<Vec<TopicCluster>, TopicError> {
    if clustering.len() != paragraphs.len() {
        return Err(TopicError::LengthMismatch {
            labels: clustering.len(),
            paragraphs: paragraphs.len(),
        });
    }
    clustering
        .members()
        .into_par_iter()
        .enumerate()
        .map(|(cluster_id, members)| {
            let docs: Vec<Vec<String>> = members
                .iter()
                .map(|&i| config.tokenizer.tokenize(paragraphs[i].analysis_text()))
                .collect();
            let lda = LdaParams {
                seed: config.lda.seed ^ cluster_id as u64,
                ..config.lda
            };
            let (label_words, keywords) = match (
                label_cluster(&docs, &config.lexicon),
                lda_keywords(&docs, &lda, config.top_n),
            ) {
                (Ok(l), Ok(k)) => (l, k),
                (Err(TopicError::EmptyCluster), _) | (_, Err(TopicError::EmptyCluster)) => {
                    (Vec::new(), Vec::new())
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            Ok(TopicCluster {
                cluster_id,
                language,
                members: members.iter().map(|&i| paragraphs[i].id()).collect(),
                kept: !keywords.is_empty(),
                drop_reason: None,
                label_words,
                keywords,
            })
        })
        .collect()
}

/// Seeded sample of kept clusters for manual inspection: `ceil(fraction *
/// kept)` cluster ids, ascending.
pub fn review_sample(clusters: &[TopicCluster], fraction: f64, seed: u64) -> Vec<usize> {
    let kept: Vec<usize> = clusters.iter().filter(|c| c.kept).map(|c| c.cluster_id).collect();
    let take = ((kept.len() as f64) * fraction).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample: Vec<usize> = kept.choose_multiple(&mut rng, take.min(kept.len())).copied().collect();
    sample.sort_unstable();
    sample
}

/// Tab-separated cluster report: id, language, size, label, keywords with
/// weights, kept flag and drop reason.
pub fn write_cluster_report<W: std::io::Write>(mut w: W, clusters: &[TopicCluster]) -> std::io::Result<()> {
    writeln!(w, "cluster_id\tlanguage\tsize\tlabel\tkeywords\tkept\tdrop_reason")?;
    for c in clusters {
        let keywords: Vec<String> = c.keywords.iter().map(|k| format!("{}:{:.6}", k.word, k.weight)).collect();
        let reason = match c.drop_reason {
            Some(DropReason::LabelUnrecognized) => "LabelUnrecognized",
            Some(DropReason::KeywordsUnrecognized) => "KeywordsUnrecognized",
            None => "",
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.cluster_id,
            c.language,
            c.size(),
            c.label_words.join(" "),
            keywords.join(" "),
            c.kept,
            reason
        )?;
    }
    Ok(())
}
