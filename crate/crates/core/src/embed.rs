//! Embedding providers: a precomputed-vector file, a seeded feature-hashing
//! embedder that needs no model, and a client for a remote embedding
//! service.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ingest::Paragraph;

pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;
pub const MIN_HASH_DIMENSION: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("nothing to embed")]
    EmptyBatch,
    #[error("empty text")]
    EmptyText,
    #[error("hash dimension {0} is below the minimum of {MIN_HASH_DIMENSION}")]
    DimensionTooSmall(usize),
    #[error("zero vector cannot be normalized{}", .id.as_deref().map(|i| format!(" ({i})")).unwrap_or_default())]
    ZeroVector { id: Option<String> },
    #[error("remote batch {batch_index} failed (retriable): {message}")]
    Remote { batch_index: usize, message: String },
    #[error("vector file has no vectors for {} paragraph(s): {}", .0.len(), .0.join(", "))]
    MissingIds(Vec<String>),
    #[error("dimension mismatch: expected {expected}, got {actual}{}", .id.as_deref().map(|i| format!(" for {i}")).unwrap_or_default())]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        id: Option<String>,
    },
    #[error("vector file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EmbedError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, EmbedError::Remote { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub id: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderConfig {
    File {
        path: PathBuf,
    },
    Hash {
        dimension: usize,
        seed: u64,
    },
    Remote {
        endpoint: String,
        #[serde(default = "default_max_in_flight")]
        max_in_flight: usize,
        #[serde(default = "default_batch_size")]
        batch_size: usize,
    },
}

fn default_max_in_flight() -> usize {
    DEFAULT_MAX_IN_FLIGHT
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

impl ProviderConfig {
    pub fn hash(dimension: usize, seed: u64) -> Self {
        ProviderConfig::Hash { dimension, seed }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        ProviderConfig::Remote {
            endpoint: endpoint.into(),
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    /// Short human-readable name used in reports.
    pub fn name(&self) -> String {
        match self {
            ProviderConfig::File { path } => format!("file:{}", path.display()),
            ProviderConfig::Hash { dimension, seed } => format!("hash:{dimension}:{seed}"),
            ProviderConfig::Remote { endpoint, .. } => format!("remote:{endpoint}"),
        }
    }

    /// Parses the compact form `hash:DIM[:SEED]`, `file:PATH` or
    /// `remote:URL`.
    pub fn parse_spec(spec: &str) -> Option<Self> {
        let (kind, rest) = spec.split_once(':')?;
        match kind {
            "hash" => {
                let mut parts = rest.split(':');
                let dimension = parts.next()?.parse().ok()?;
                let seed = match parts.next() {
                    Some(s) => s.parse().ok()?,
                    None => 0,
                };
                Some(Self::hash(dimension, seed))
            }
            "file" if !rest.is_empty() => Some(ProviderConfig::File { path: rest.into() }),
            "remote" if !rest.is_empty() => Some(Self::remote(rest)),
            _ => None,
        }
    }
}

pub fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, EmbedError> {
    let values = normalized(&v.values).ok_or_else(|| EmbedError::ZeroVector {
        id: Some(v.id.clone()),
    })?;
    Ok(EmbeddingVector {
        id: v.id.clone(),
        values,
    })
}

pub(crate) fn normalized(values: &[f64]) -> Option<Vec<f64>> {
    let norm = l2_norm(values);
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(values.iter().map(|v| v / norm).collect())
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (l2_norm(a) * l2_norm(b))
}

/// 64-bit FNV-1a over the seed bytes and the token, finished with the
/// splitmix64 mixer so that low bits are usable as a bucket index.
fn seeded_hash(seed: u64, token: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(token.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Signed feature hashing of whitespace tokens (lowercased), L2-normalized.
pub fn hash_embed(text: &str, dimension: usize, seed: u64) -> Result<Vec<f64>, EmbedError> {
    if dimension < MIN_HASH_DIMENSION {
        return Err(EmbedError::DimensionTooSmall(dimension));
    }
    let mut acc = vec![0.0; dimension];
    let mut any = false;
    for token in text.split_whitespace() {
        any = true;
        let h = seeded_hash(seed, &token.to_lowercase());
        let bucket = (h % dimension as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }
    if !any {
        return Err(EmbedError::EmptyText);
    }
    normalized(&acc).ok_or(EmbedError::ZeroVector { id: None })
}

/// Embeds every paragraph (translated text for Russian ones), preserving
/// input order.
pub fn embed_batch(
    paragraphs: &[Paragraph],
    config: &ProviderConfig,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    if paragraphs.is_empty() {
        return Err(EmbedError::EmptyBatch);
    }
    let ids: Vec<String> = paragraphs.iter().map(Paragraph::id).collect();
    let values = match config {
        ProviderConfig::Hash { dimension, seed } => paragraphs
            .iter()
            .zip(&ids)
            .map(|(p, id)| {
                hash_embed(p.analysis_text(), *dimension, *seed).map_err(|e| match e {
                    EmbedError::ZeroVector { .. } => EmbedError::ZeroVector { id: Some(id.clone()) },
                    e => e,
                })
            })
            .collect::<Result<Vec<_>, _>>()?,
        ProviderConfig::File { path } => {
            let store = VectorFile::from_path(path)?;
            store.lookup(&ids)?
        }
        ProviderConfig::Remote {
            endpoint,
            max_in_flight,
            batch_size,
        } => {
            let client = RemoteEmbedder::new(endpoint, *max_in_flight, *batch_size);
            let texts: Vec<&str> = paragraphs.iter().map(Paragraph::analysis_text).collect();
            client.embed(&texts)?
        }
    };
    Ok(ids
        .into_iter()
        .zip(values)
        .map(|(id, values)| EmbeddingVector { id, values })
        .collect())
}

/// In-memory view of a precomputed-vector file: a `dim=D` header, then one
/// `id v1 .. vD` record per line.
#[derive(Debug, Clone, Default)]
pub struct VectorFile {
    pub dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl VectorFile {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, EmbedError> {
        let records = read_vectors(reader)?;
        let dimension = records.first().map(EmbeddingVector::dimension).unwrap_or(0);
        let vectors = records.into_iter().map(|v| (v.id, v.values)).collect();
        Ok(Self { dimension, vectors })
    }

    pub fn from_path(path: &Path) -> Result<Self, EmbedError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn lookup(&self, ids: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let missing: Vec<String> = ids
            .iter()
            .filter(|id| !self.vectors.contains_key(id.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(EmbedError::MissingIds(missing));
        }
        Ok(ids.iter().map(|id| self.vectors[id.as_str()].clone()).collect())
    }
}

pub fn write_vectors<W: Write>(mut writer: W, vectors: &[EmbeddingVector]) -> Result<(), EmbedError> {
    let dimension = vectors.first().map(EmbeddingVector::dimension).unwrap_or(0);
    writeln!(writer, "dim={dimension}")?;
    for v in vectors {
        if v.dimension() != dimension {
            return Err(EmbedError::DimensionMismatch {
                expected: dimension,
                actual: v.dimension(),
                id: Some(v.id.clone()),
            });
        }
        write!(writer, "{}", v.id)?;
        for x in &v.values {
            write!(writer, " {x}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Reads a vector file keeping record order.
pub fn read_vectors<R: BufRead>(reader: R) -> Result<Vec<EmbeddingVector>, EmbedError> {
    let mut out = Vec::new();
    let mut dimension = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Some(dim) = dimension else {
            dimension = Some(
                line.trim()
                    .strip_prefix("dim=")
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| EmbedError::Parse {
                        line: i + 1,
                        message: "expected header dim=D".into(),
                    })?,
            );
            continue;
        };
        let mut fields = line.split_whitespace();
        let id = fields.next().unwrap_or_default().to_string();
        let values = fields
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| EmbedError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        if values.len() != dim {
            return Err(EmbedError::DimensionMismatch {
                expected: dim,
                actual: values.len(),
                id: Some(id),
            });
        }
        out.push(EmbeddingVector { id, values });
    }
    Ok(out)
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Response of `GET /health`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

/// Client for the `/embed` + `/health` wire contract. Texts are sent in
/// batches of `batch_size`, with at most `max_in_flight` requests open at
/// once; results come back in input order.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    endpoint: String,
    max_in_flight: usize,
    batch_size: usize,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn new(endpoint: &str, max_in_flight: usize, batch_size: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            max_in_flight: max_in_flight.max(1),
            batch_size: batch_size.max(1),
            agent,
        }
    }

    pub fn health(&self) -> Result<Health, EmbedError> {
        let remote = |message: String| EmbedError::Remote {
            batch_index: 0,
            message,
        };
        let mut resp = self
            .agent
            .get(&format!("{}/health", self.endpoint))
            .call()
            .map_err(|e| remote(e.to_string()))?;
        resp.body_mut().read_json().map_err(|e| remote(e.to_string()))
    }

    fn embed_one(&self, batch_index: usize, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let remote = |message: String| EmbedError::Remote {
            batch_index,
            message,
        };
        let mut resp = self
            .agent
            .post(&format!("{}/embed", self.endpoint))
            .send_json(EmbedRequest { texts })
            .map_err(|e| remote(e.to_string()))?;
        let body: EmbedResponse = resp.body_mut().read_json().map_err(|e| remote(e.to_string()))?;
        if body.vectors.len() != texts.len() {
            return Err(remote(format!(
                "expected {} vectors, got {}",
                texts.len(),
                body.vectors.len()
            )));
        }
        if let Some(bad) = body.vectors.iter().find(|v| v.len() != body.dim) {
            return Err(EmbedError::DimensionMismatch {
                expected: body.dim,
                actual: bad.len(),
                id: None,
            });
        }
        Ok(body.vectors)
    }

    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let batches: Vec<&[&str]> = texts.chunks(self.batch_size).collect();
        let results: Mutex<Vec<Option<Result<Vec<Vec<f64>>, EmbedError>>>> =
            Mutex::new((0..batches.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..self.max_in_flight.min(batches.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= batches.len() {
                        break;
                    }
                    let r = self.embed_one(i, batches[i]);
                    results.lock().expect("poisoned")[i] = Some(r);
                });
            }
        });
        let mut out = Vec::with_capacity(texts.len());
        let mut dimension = None;
        for r in results.into_inner().expect("poisoned") {
            let vectors = r.expect("every batch is processed")?;
            for v in vectors {
                match dimension {
                    None => dimension = Some(v.len()),
                    Some(d) if d != v.len() => {
                        return Err(EmbedError::DimensionMismatch {
                            expected: d,
                            actual: v.len(),
                            id: None,
                        })
                    }
                    _ => {}
                }
                out.push(v);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Language;

    fn paragraph(id: u32, text: &str) -> Paragraph {
        Paragraph {
            thread_id: "t".into(),
            post_id: "p".into(),
            author_id: "a".into(),
            index_in_post: id,
            text: text.into(),
            language: Language::English,
            is_headline: false,
            translated_text: None,
        }
    }

    #[test]
    fn normalize_examples() {
        let v = EmbeddingVector {
            id: "x".into(),
            values: vec![3.0, 4.0],
        };
        let n = normalize(&v).unwrap();
        assert!((n.values[0] - 0.6).abs() < 1e-12 && (n.values[1] - 0.8).abs() < 1e-12);
        assert_eq!(normalize(&n).unwrap().values, n.values);
        let zero = EmbeddingVector {
            id: "z".into(),
            values: vec![0.0, 0.0],
        };
        assert!(matches!(normalize(&zero), Err(EmbedError::ZeroVector { .. })));
    }

    #[test]
    fn hash_embed_is_deterministic_and_unit() {
        let a = hash_embed("reset the bios password", 64, 7).unwrap();
        let b = hash_embed("reset the bios password", 64, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert!((l2_norm(&a) - 1.0).abs() < 1e-12);
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
        assert_ne!(a, hash_embed("reset the bios password", 64, 8).unwrap());
    }

    #[test]
    fn hash_embed_errors() {
        assert!(matches!(hash_embed("   ", 64, 0), Err(EmbedError::EmptyText)));
        assert!(matches!(hash_embed("x", 4, 0), Err(EmbedError::DimensionTooSmall(4))));
    }

    #[test]
    fn repeated_token_stays_close() {
        for seed in 0..50 {
            let a = hash_embed("cat dog", 64, seed).unwrap();
            let b = hash_embed("cat dog cat", 64, seed).unwrap();
            assert!(cosine(&a, &b) > 0.8, "seed {seed}");
        }
    }

    #[test]
    fn hash_batch_dimension_and_order() {
        let ps = vec![paragraph(0, "alpha beta"), paragraph(1, "gamma delta"), paragraph(2, "alpha beta")];
        let out = embed_batch(&ps, &ProviderConfig::hash(64, 1)).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|v| v.dimension() == 64));
        assert_eq!(out[0].values, out[2].values);
        assert_eq!(out[1].id, "t/p/1");
    }

    #[test]
    fn translated_text_is_embedded() {
        let mut ru = paragraph(0, "кот собака");
        ru.language = Language::Russian;
        ru.translated_text = Some("cat dog".into());
        let out = embed_batch(&[ru], &ProviderConfig::hash(32, 0)).unwrap();
        assert_eq!(out[0].values, hash_embed("cat dog", 32, 0).unwrap());
    }

    #[test]
    fn file_provider_reports_missing_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vecs.txt");
        std::fs::write(&path, "dim=2\nt/p/0 1 0\nt/p/1 0 1\nt/p/2 1 1\n").unwrap();
        let ps: Vec<_> = (0..4).map(|i| paragraph(i, "x y")).collect();
        let err = embed_batch(&ps, &ProviderConfig::File { path: path.clone() }).unwrap_err();
        match err {
            EmbedError::MissingIds(ids) => assert_eq!(ids, ["t/p/3"]),
            e => panic!("unexpected {e}"),
        }
        let ok = embed_batch(&ps[..3], &ProviderConfig::File { path }).unwrap();
        assert_eq!(ok[2].values, [1.0, 1.0]);
    }

    #[test]
    fn vector_file_round_trip() {
        let vs = vec![
            EmbeddingVector { id: "a".into(), values: vec![0.1, -2.5e-9, 1.0 / 3.0] },
            EmbeddingVector { id: "b".into(), values: vec![0.0, 1.0, -0.0] },
        ];
        let mut buf = Vec::new();
        write_vectors(&mut buf, &vs).unwrap();
        assert!(buf.starts_with(b"dim=3\n"));
        assert_eq!(read_vectors(buf.as_slice()).unwrap(), vs);
    }

    #[test]
    fn vector_file_rejects_wrong_width() {
        let err = VectorFile::from_reader("dim=3\na 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EmbedError::DimensionMismatch { expected: 3, actual: 2, .. }));
    }

    #[test]
    fn remote_unreachable_is_retriable_with_batch_index() {
        let client = RemoteEmbedder::new("http://127.0.0.1:9", 2, 1);
        let err = client.embed(&["a", "b", "c"]).unwrap_err();
        assert!(err.is_retriable());
        assert!(matches!(err, EmbedError::Remote { batch_index: 0, .. }));
    }

    #[test]
    fn provider_spec_parsing() {
        assert_eq!(ProviderConfig::parse_spec("hash:128:3"), Some(ProviderConfig::hash(128, 3)));
        assert_eq!(ProviderConfig::parse_spec("hash:64"), Some(ProviderConfig::hash(64, 0)));
        assert_eq!(
            ProviderConfig::parse_spec("file:/tmp/v.txt"),
            Some(ProviderConfig::File { path: "/tmp/v.txt".into() })
        );
        assert_eq!(
            ProviderConfig::parse_spec("remote:http://h:1"),
            Some(ProviderConfig::remote("http://h:1"))
        );
        assert_eq!(ProviderConfig::parse_spec("bogus"), None);
    }
}
