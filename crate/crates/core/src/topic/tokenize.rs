use std::collections::HashSet;
use std::io::BufRead;
use std::sync::OnceLock;

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Lowercasing tokenizer with a stop-word list.
///
/// Tokens are maximal alphanumeric runs; a `-` or `.` between two
/// alphanumerics stays inside the token, so `no-ip` and `v2.0` survive.
/// Single-character tokens and stop words are dropped.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        static DEFAULT: OnceLock<HashSet<String>> = OnceLock::new();
        let stopwords = DEFAULT
            .get_or_init(|| parse_word_list(DEFAULT_STOPWORDS.as_bytes()).expect("embedded list"))
            .clone();
        Self { stopwords }
    }
}

impl Tokenizer {
    pub fn with_stopwords(stopwords: HashSet<String>) -> Self {
        Self { stopwords }
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        raw_tokens(text)
            .into_iter()
            .filter(|t| t.chars().count() > 1 && !self.stopwords.contains(t))
            .collect()
    }
}

/// Tokenizes with the shipped English stop-word list.
pub fn tokenize(text: &str) -> Vec<String> {
    static TOKENIZER: OnceLock<Tokenizer> = OnceLock::new();
    TOKENIZER.get_or_init(Tokenizer::default).tokenize(text)
}

fn raw_tokens(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if (c == '-' || c == '.')
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push(c);
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// One lowercase entry per line; blank lines and surrounding whitespace are
/// ignored.
pub fn parse_word_list<R: BufRead>(reader: R) -> std::io::Result<HashSet<String>> {
    let mut out = HashSet::new();
    for line in reader.lines() {
        let line = line?;
        let word = line.trim();
        if !word.is_empty() {
            out.insert(word.to_lowercase());
        }
    }
    Ok(out)
}
