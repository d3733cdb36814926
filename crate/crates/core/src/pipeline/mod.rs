//! Stage-wise orchestration with on-disk artifacts.
//!
//! Each stage reads only the config and earlier stages' artifacts from the
//! output directory, writes its own artifacts, and records a manifest with
//! the hash of the config slice it depends on and the hashes of its inputs
//! and outputs. A stage whose manifest still matches is skipped; a stage
//! whose config slice changed refuses to overwrite its artifacts unless
//! forced.

mod config;
mod manifest;
mod report;
mod stages;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{PipelineConfig, DEFAULT_PROVIDER};
pub use manifest::{hash_bytes, hash_file, DirLock, Manifest, VERSION};
pub use report::render_report;
pub use stages::artifacts;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{requires} artifacts missing ({}): run `{requires}` before `{stage}`", .path.display())]
    MissingStage { stage: Stage, requires: Stage, path: PathBuf },
    #[error("config for stage `{0}` changed since its artifacts were written; rerun with --force to overwrite")]
    ConfigChanged(Stage),
    #[error("output directory is locked by another run ({}); remove the file if no run is active", .0.display())]
    Locked(PathBuf),
    #[error("provider failure: {0}")]
    Provider(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: Stage, message: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn stage(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            message: e.to_string(),
        }
    }

    /// Process exit code: 2 usage/config, 3 missing prerequisite stage,
    /// 4 provider or remote failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::ConfigChanged(_) | PipelineError::Locked(_) => 2,
            PipelineError::MissingStage { .. } => 3,
            PipelineError::Provider(_) => 4,
            PipelineError::Stage { .. } | PipelineError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Synth,
    Ingest,
    Embed,
    Cluster,
    Represent,
    Compare,
    Jargon,
    Eval,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Synth,
        Stage::Ingest,
        Stage::Embed,
        Stage::Cluster,
        Stage::Represent,
        Stage::Compare,
        Stage::Jargon,
        Stage::Eval,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Embed => "embed",
            Stage::Cluster => "cluster",
            Stage::Represent => "represent",
            Stage::Compare => "compare",
            Stage::Jargon => "jargon",
            Stage::Eval => "eval",
            Stage::Report => "report",
        }
    }

    /// Upstream stages whose artifacts must exist, earliest first. Synth is
    /// handled separately since it is only needed without an explicit input.
    pub fn requires(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            Synth | Ingest => &[],
            Embed | Eval => &[Ingest],
            Cluster => &[Ingest, Embed],
            Represent => &[Ingest, Embed, Cluster],
            Compare | Jargon => &[Ingest, Embed, Cluster, Represent],
            Report => &[Ingest, Embed, Cluster, Represent, Compare],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageOutcome {
    Ran(Manifest),
    Skipped(Stage),
}

impl StageOutcome {
    pub fn was_skipped(&self) -> bool {
        matches!(self, StageOutcome::Skipped(_))
    }
}

/// One run over an output directory, holding its lock.
#[derive(Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    force: bool,
    _lock: DirLock,
}

impl Pipeline {
    pub fn open(config: PipelineConfig, force: bool) -> Result<Self, PipelineError> {
        config.validate()?;
        let lock = DirLock::acquire(&config.out_dir)?;
        Ok(Self {
            config,
            force,
            _lock: lock,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.out_dir
    }

    fn check_prerequisites(&self, stage: Stage) -> Result<(), PipelineError> {
        let out = self.out_dir();
        let mut needed: Vec<Stage> = Vec::new();
        if stage == Stage::Ingest && self.config.input.is_none() {
            needed.push(Stage::Synth);
        }
        needed.extend_from_slice(stage.requires());
        for requires in needed {
            for path in stages::outputs(&self.config, requires) {
                if !path.exists() {
                    return Err(PipelineError::MissingStage { stage, requires, path });
                }
            }
            if Manifest::load(out, requires.name())?.is_none() {
                return Err(PipelineError::MissingStage {
                    stage,
                    requires,
                    path: Manifest::path(out, requires.name()),
                });
            }
        }
        Ok(())
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome, PipelineError> {
        self.check_prerequisites(stage)?;
        let out = self.out_dir().to_path_buf();
        let config_hash = stages::config_hash(&self.config, stage);
        let input_paths = stages::inputs(&self.config, stage);
        let inputs = manifest::hash_files(&out, &input_paths)?;

        if let Some(previous) = Manifest::load(&out, stage.name())? {
            if !self.force {
                if previous.config_hash != config_hash {
                    return Err(PipelineError::ConfigChanged(stage));
                }
                if previous.inputs == inputs && previous.outputs_intact(&out) {
                    log::info!("{stage}: up to date, skipping");
                    return Ok(StageOutcome::Skipped(stage));
                }
            }
        }

        log::info!("{stage}: running");
        let started = Instant::now();
        let written = stages::run(&self.config, stage)?;
        let manifest = Manifest {
            stage: stage.name().to_string(),
            version: VERSION.to_string(),
            config_hash,
            overrides: self.config.overrides(),
            inputs,
            outputs: manifest::hash_files(&out, &written)?,
            wall_time_ms: started.elapsed().as_millis(),
            finished_at_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        manifest.save(&out)?;
        log::info!("{stage}: done in {} ms", manifest.wall_time_ms);
        Ok(StageOutcome::Ran(manifest))
    }

    /// Runs ingest through report in order; synth first when no input is
    /// configured, eval only when asked.
    pub fn run_all(&self, with_eval: bool) -> Result<Vec<StageOutcome>, PipelineError> {
        let mut plan = Vec::new();
        if self.config.input.is_none() {
            plan.push(Stage::Synth);
        }
        plan.extend([
            Stage::Ingest,
            Stage::Embed,
            Stage::Cluster,
            Stage::Represent,
            Stage::Compare,
            Stage::Jargon,
        ]);
        if with_eval {
            plan.push(Stage::Eval);
        }
        plan.push(Stage::Report);
        plan.into_iter().map(|s| self.run_stage(s)).collect()
    }
}
