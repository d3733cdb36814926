//! Short cluster labels: a verb, a noun that appears alongside it, and two
//! more nouns, chosen by term frequency with the help of a POS lexicon.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use super::lda::term_counts;
use super::TopicError;

const DEFAULT_LEXICON: &str = include_str!("../../data/pos_lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Verb,
    Noun,
    Other,
}

/// Word to part-of-speech lookup, loaded from `word<TAB>tag` lines with tags
/// `V`, `N` or `OTHER`. A word may carry several tags.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    tags: HashMap<String, HashSet<PosTag>>,
}

impl PosLexicon {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, TopicError> {
        let mut tags: HashMap<String, HashSet<PosTag>> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: &str| TopicError::Parse {
                line: i + 1,
                message: message.to_string(),
            };
            let (word, tag) = line.split_once('\t').ok_or_else(|| bad("expected word<TAB>tag"))?;
            let tag = match tag.trim() {
                "V" => PosTag::Verb,
                "N" => PosTag::Noun,
                "OTHER" => PosTag::Other,
                _ => return Err(bad("tag must be V, N or OTHER")),
            };
            tags.entry(word.trim().to_lowercase()).or_default().insert(tag);
        }
        Ok(Self { tags })
    }

    pub fn from_path(path: &Path) -> Result<Self, TopicError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// The small IT-flavoured lexicon shipped with the crate.
    pub fn shipped() -> Self {
        Self::from_reader(DEFAULT_LEXICON.as_bytes()).expect("embedded lexicon")
    }

    pub fn insert(&mut self, word: &str, tag: PosTag) {
        self.tags.entry(word.to_lowercase()).or_default().insert(tag);
    }

    pub fn has(&self, word: &str, tag: PosTag) -> bool {
        self.tags.get(word).is_some_and(|t| t.contains(&tag))
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

pub const MAX_LABEL_WORDS: usize = 4;

/// Builds a label of up to four words from tokenized cluster documents:
/// the most frequent verb, the most frequent noun sharing a document with
/// that verb, then the next two most frequent nouns. Slots without a
/// qualifying word are skipped; if nothing qualifies the four most frequent
/// words are used instead. Frequency ties go to the alphabetically first
/// word.
pub fn label_cluster(docs: &[Vec<String>], lexicon: &PosLexicon) -> Result<Vec<String>, TopicError> {
    let counts = term_counts(docs);
    if counts.is_empty() {
        return Err(TopicError::EmptyCluster);
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let ranked: Vec<&str> = ranked.into_iter().map(|(w, _)| w).collect();

    let mut label: Vec<&str> = Vec::new();
    let verb = ranked.iter().copied().find(|w| lexicon.has(w, PosTag::Verb));
    if let Some(verb) = verb {
        label.push(verb);
        let object = ranked.iter().copied().find(|&w| {
            w != verb
                && lexicon.has(w, PosTag::Noun)
                && docs
                    .iter()
                    .any(|d| d.iter().any(|t| t == verb) && d.iter().any(|t| t == w))
        });
        if let Some(object) = object {
            label.push(object);
        }
    }
    let nouns: Vec<&str> = ranked
        .iter()
        .copied()
        .filter(|w| lexicon.has(w, PosTag::Noun) && !label.contains(w))
        .take(2)
        .collect();
    label.extend(nouns);

    if label.is_empty() {
        label = ranked.into_iter().take(MAX_LABEL_WORDS).collect();
    }
    Ok(label.into_iter().map(str::to_string).collect())
}
