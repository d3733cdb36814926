//! Translation providers used to bring Russian paragraphs into English
//! before embedding and keyword extraction.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ingest::Language;

#[derive(Debug, thiserror::Error)]
pub enum TranslateError {
    #[error("translation provider unavailable: {0}")]
    Unavailable(String),
    #[error("malformed translation table at line {line}: {message}")]
    Table { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, source: Language) -> Result<String, TranslateError>;
}

/// Returns the input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate(&self, text: &str, _source: Language) -> Result<String, TranslateError> {
        Ok(text.to_string())
    }
}

/// Word-for-word lookup. Whitespace-separated tokens found in the table
/// are replaced; everything else passes through untouched.
#[derive(Debug, Clone, Default)]
pub struct TableTranslator {
    table: HashMap<String, String>,
}

impl TableTranslator {
    pub fn new(table: HashMap<String, String>) -> Self {
        Self { table }
    }

    /// Parses `source<TAB>target` lines. Blank lines are ignored.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, TranslateError> {
        let mut table = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (src, dst) = line.split_once('\t').ok_or_else(|| TranslateError::Table {
                line: i + 1,
                message: "expected two tab-separated columns".into(),
            })?;
            table.insert(src.trim().to_string(), dst.trim().to_string());
        }
        Ok(Self { table })
    }

    pub fn from_path(path: &Path) -> Result<Self, TranslateError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Translator for TableTranslator {
    fn translate(&self, text: &str, _source: Language) -> Result<String, TranslateError> {
        let words: Vec<&str> = text
            .split_whitespace()
            .map(|w| self.table.get(w).map(String::as_str).unwrap_or(w))
            .collect();
        Ok(words.join(" "))
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    source_lang: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: String,
}

/// Client for a `/translate` sidecar.
#[derive(Debug, Clone)]
pub struct RemoteTranslator {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteTranslator {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            agent,
        }
    }
}

impl Translator for RemoteTranslator {
    fn translate(&self, text: &str, source: Language) -> Result<String, TranslateError> {
        let url = format!("{}/translate", self.endpoint);
        let mut resp = self
            .agent
            .post(&url)
            .send_json(TranslateRequest {
                text,
                source_lang: source.code(),
            })
            .map_err(|e| TranslateError::Unavailable(e.to_string()))?;
        let body: TranslateResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| TranslateError::Unavailable(e.to_string()))?;
        Ok(body.text)
    }
}
