//! Corpus ingestion: posts are split into newline-delimited paragraphs,
//! routed by detected language, and screened for code-like debris and
//! fragments too short to carry meaning.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::translate::Translator;

/// Symbol-to-text ratio above which a paragraph counts as non-conversational.
pub const DEFAULT_NOISE_RATIO: f64 = 0.12;
/// A non-headline paragraph is short when it has fewer spaces than this...
pub const DEFAULT_MIN_SPACES: usize = 5;
/// ...and fewer characters than this.
pub const DEFAULT_MIN_CHARS: usize = 30;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("empty corpus: no authors")]
    EmptyCorpus,
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    English,
    Russian,
    Other,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::English => "en",
            Language::Russian => "ru",
            Language::Other => "other",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One post as it appears in the input corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPost {
    pub thread_id: String,
    pub post_id: String,
    pub author_id: String,
    /// Ordinal within the thread; 0 is the opening post.
    pub position: u32,
    /// Thread title, present only on the opening post.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub headline: Option<String>,
    #[serde(default)]
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
}

impl RawPost {
    fn validate(&self) -> Result<(), String> {
        match (&self.headline, self.position) {
            (Some(h), 0) if h.trim().is_empty() => Err("headline must be non-empty".into()),
            (Some(_), 0) | (None, 1..) => Ok(()),
            (Some(_), _) => Err("headline present on a post with position > 0".into()),
            (None, 0) => Err("opening post (position 0) is missing its headline".into()),
        }
    }
}

/// A language-homogeneous fragment of a post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub thread_id: String,
    pub post_id: String,
    pub author_id: String,
    pub index_in_post: u32,
    pub text: String,
    pub language: Language,
    pub is_headline: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translated_text: Option<String>,
}

impl Paragraph {
    /// Stable identifier `thread/post/index`.
    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.thread_id, self.post_id, self.index_in_post)
    }

    /// Text used for embedding and keyword extraction: the English
    /// translation for Russian paragraphs, the original otherwise.
    pub fn analysis_text(&self) -> &str {
        self.translated_text.as_deref().unwrap_or(&self.text)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub paragraph_count: usize,
    pub thread_count: usize,
    pub author_count: usize,
    pub bilingual_author_count: usize,
    pub per_language_counts: BTreeMap<Language, usize>,
}

/// Splits a post into paragraphs on newlines. The headline, when present,
/// comes first and is flagged; empty lines are dropped. Language is left
/// as `Other` until detection runs.
pub fn split_paragraphs(post: &RawPost) -> Vec<Paragraph> {
    let make = |index: u32, text: &str, is_headline: bool| Paragraph {
        thread_id: post.thread_id.clone(),
        post_id: post.post_id.clone(),
        author_id: post.author_id.clone(),
        index_in_post: index,
        text: text.to_string(),
        language: Language::Other,
        is_headline,
        translated_text: None,
    };

    let mut out = Vec::new();
    if let Some(headline) = post.headline.as_deref().filter(|h| !h.trim().is_empty()) {
        out.push(make(0, headline.trim(), true));
    }
    for line in post.body.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let index = out.len() as u32;
        out.push(make(index, line, false));
    }
    out
}

pub trait LanguageDetector: Send + Sync {
    fn detect(&self, text: &str) -> Language;
}

/// Script-ratio detector: Russian when more than half of all letters are
/// Cyrillic, English when more than half are Latin.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptDetector;

impl LanguageDetector for ScriptDetector {
    fn detect(&self, text: &str) -> Language {
        detect_language(text)
    }
}

fn is_cyrillic(c: char) -> bool {
    matches!(c, '\u{0400}'..='\u{04FF}' | '\u{0500}'..='\u{052F}')
}

pub fn detect_language(text: &str) -> Language {
    let (mut letters, mut cyrillic, mut latin) = (0usize, 0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if is_cyrillic(c) {
            cyrillic += 1;
        } else if c.is_ascii_alphabetic() || matches!(c, '\u{00C0}'..='\u{024F}') {
            latin += 1;
        }
    }
    if letters == 0 {
        Language::Other
    } else if 2 * cyrillic > letters {
        Language::Russian
    } else if 2 * latin > letters {
        Language::English
    } else {
        Language::Other
    }
}

/// Fraction of non-whitespace characters that are neither letters nor digits.
/// Returns 0 for whitespace-only text.
pub fn symbol_ratio(text: &str) -> f64 {
    let (symbols, visible) = symbol_counts(text);
    if visible == 0 {
        0.0
    } else {
        symbols as f64 / visible as f64
    }
}

fn symbol_counts(text: &str) -> (usize, usize) {
    let mut symbols = 0usize;
    let mut visible = 0usize;
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        visible += 1;
        if !c.is_alphanumeric() {
            symbols += 1;
        }
    }
    (symbols, visible)
}

/// True when the symbol ratio strictly exceeds `threshold`. Compared in
/// integer arithmetic so that e.g. 12 of 100 is not above 0.12.
pub fn exceeds_symbol_ratio(text: &str, threshold: f64) -> bool {
    let (symbols, visible) = symbol_counts(text);
    if visible == 0 {
        return false;
    }
    let limit = crate::ratio::Ratio::from_f64(threshold);
    limit.is_exceeded_by(symbols as u64, visible as u64)
}

pub fn is_nonconversational(text: &str) -> bool {
    exceeds_symbol_ratio(text, DEFAULT_NOISE_RATIO)
}

pub fn is_too_short(paragraph: &Paragraph) -> bool {
    is_too_short_with(paragraph, DEFAULT_MIN_SPACES, DEFAULT_MIN_CHARS)
}

pub fn is_too_short_with(paragraph: &Paragraph, min_spaces: usize, min_chars: usize) -> bool {
    if paragraph.is_headline {
        return false;
    }
    let spaces = paragraph.text.chars().filter(|&c| c == ' ').count();
    let chars = paragraph.text.chars().count();
    spaces < min_spaces && chars < min_chars
}

/// Thresholds for the two paragraph filters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub noise_ratio: f64,
    pub min_spaces: usize,
    pub min_chars: usize,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            noise_ratio: DEFAULT_NOISE_RATIO,
            min_spaces: DEFAULT_MIN_SPACES,
            min_chars: DEFAULT_MIN_CHARS,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub english: Vec<Paragraph>,
    pub russian: Vec<Paragraph>,
    pub stats: CorpusStats,
}

/// Runs split, detect, noise filter and length filter over every post,
/// translates Russian survivors, and routes paragraphs into the two
/// language corpora. Paragraphs whose translation fails are dropped.
pub fn build_corpus(
    posts: &[RawPost],
    detector: &dyn LanguageDetector,
    translator: &dyn Translator,
    filters: &FilterParams,
) -> Corpus {
    let mut candidates: Vec<Paragraph> = posts
        .par_iter()
        .flat_map_iter(|post| {
            split_paragraphs(post).into_iter().filter_map(|mut p| {
                p.language = detector.detect(&p.text);
                if p.language == Language::Other
                    || exceeds_symbol_ratio(&p.text, filters.noise_ratio)
                    || is_too_short_with(&p, filters.min_spaces, filters.min_chars)
                {
                    return None;
                }
                Some(p)
            })
        })
        .collect();

    candidates = candidates
        .into_par_iter()
        .filter_map(|mut p| {
            if p.language != Language::Russian {
                return Some(p);
            }
            match translator.translate(&p.text, Language::Russian) {
                Ok(t) => {
                    p.translated_text = Some(t);
                    Some(p)
                }
                Err(e) => {
                    log::warn!("dropping paragraph {}: translation failed: {e}", p.id());
                    None
                }
            }
        })
        .collect();

    candidates.sort_by(|a, b| {
        (&a.thread_id, &a.post_id, a.index_in_post).cmp(&(&b.thread_id, &b.post_id, b.index_in_post))
    });

    let stats = corpus_stats(&candidates);
    let (russian, english): (Vec<_>, Vec<_>) = candidates
        .into_iter()
        .partition(|p| p.language == Language::Russian);
    Corpus {
        english,
        russian,
        stats,
    }
}

pub fn corpus_stats(paragraphs: &[Paragraph]) -> CorpusStats {
    let mut threads = HashSet::new();
    let mut authors: HashMap<&str, HashSet<Language>> = HashMap::new();
    let mut per_language_counts = BTreeMap::new();
    for p in paragraphs {
        threads.insert(p.thread_id.as_str());
        authors.entry(&p.author_id).or_default().insert(p.language);
        *per_language_counts.entry(p.language).or_insert(0) += 1;
    }
    let bilingual_author_count = authors
        .values()
        .filter(|langs| langs.contains(&Language::English) && langs.contains(&Language::Russian))
        .count();
    CorpusStats {
        paragraph_count: paragraphs.len(),
        thread_count: threads.len(),
        author_count: authors.len(),
        bilingual_author_count,
        per_language_counts,
    }
}

pub fn compute_bilingual_fraction(stats: &CorpusStats) -> Result<f64, IngestError> {
    if stats.author_count == 0 {
        return Err(IngestError::EmptyCorpus);
    }
    Ok(stats.bilingual_author_count as f64 / stats.author_count as f64)
}

/// Reads one JSON post record per line. Blank lines are skipped.
pub fn read_posts<R: BufRead>(reader: R) -> Result<Vec<RawPost>, IngestError> {
    let mut posts = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let post: RawPost =
            serde_json::from_str(&line).map_err(|source| IngestError::Record { line: i + 1, source })?;
        post.validate()
            .map_err(|message| IngestError::Invalid { line: i + 1, message })?;
        posts.push(post);
    }
    Ok(posts)
}

pub fn write_posts<W: Write>(mut writer: W, posts: &[RawPost]) -> std::io::Result<()> {
    for post in posts {
        serde_json::to_writer(&mut writer, post)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_paragraphs<R: BufRead>(reader: R) -> Result<Vec<Paragraph>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| IngestError::Record { line: i + 1, source })?,
        );
    }
    Ok(out)
}

pub fn write_paragraphs<W: Write>(mut writer: W, paragraphs: &[Paragraph]) -> std::io::Result<()> {
    for p in paragraphs {
        serde_json::to_writer(&mut writer, p)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
