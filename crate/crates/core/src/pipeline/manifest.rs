use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Record written next to a stage's artifacts. Paths are relative to the
/// output directory when they live inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub version: String,
    pub config_hash: String,
    /// Non-default config values in effect for the run.
    pub overrides: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_ms: u128,
    pub finished_at_unix: u64,
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String, PipelineError> {
    let mut file = fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| PipelineError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn display_path(out_dir: &Path, path: &Path) -> String {
    path.strip_prefix(out_dir).unwrap_or(path).display().to_string()
}

pub fn hash_files(out_dir: &Path, paths: &[PathBuf]) -> Result<BTreeMap<String, String>, PipelineError> {
    paths
        .iter()
        .map(|p| Ok((display_path(out_dir, p), hash_file(p)?)))
        .collect()
}

impl Manifest {
    pub fn path(out_dir: &Path, stage: &str) -> PathBuf {
        out_dir.join(format!("{stage}.manifest.json"))
    }

    pub fn load(out_dir: &Path, stage: &str) -> Result<Option<Self>, PipelineError> {
        let path = Self::path(out_dir, stage);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| PipelineError::Config(format!("corrupt manifest {}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(PipelineError::io(&path, e)),
        }
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), PipelineError> {
        let path = Self::path(out_dir, &self.stage);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| PipelineError::io(&path, e))
    }

    /// True when every recorded output still exists with its recorded hash.
    pub fn outputs_intact(&self, out_dir: &Path) -> bool {
        self.outputs.iter().all(|(name, hash)| {
            let path = out_dir.join(name);
            matches!(hash_file(&path), Ok(h) if &h == hash)
        })
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub const FILE: &'static str = ".lock";

    pub fn acquire(out_dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
        let path = out_dir.join(Self::FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                use std::io::Write;
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::Locked(path)),
            Err(e) => Err(PipelineError::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
