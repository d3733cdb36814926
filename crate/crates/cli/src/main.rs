use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pocketlens::pipeline::{artifacts, Pipeline, PipelineConfig, PipelineError, Stage, StageOutcome};

/// Cross-language topic comparison for forum corpora.
#[derive(Debug, Parser)]
#[command(name = "pocketlens", version)]
struct Cli {
    /// Flat key = value config file; absent keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for synthetic data, sampling and review selection.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rerun stages even when their manifests match or their config changed.
    #[arg(long, global = true)]
    force: bool,
    /// Output directory for artifacts and manifests.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic bilingual corpus with planted topics.
    Synth,
    /// Split, filter, detect language and translate posts into paragraphs.
    Ingest,
    /// Embed the paragraphs of both corpora.
    Embed,
    /// Cluster each corpus's embeddings.
    Cluster,
    /// Label clusters and extract their keywords.
    Represent,
    /// Score Russian against English clusters.
    Compare,
    /// List keywords absent from every glossary.
    Jargon,
    /// Compare embedding providers by clustering stability.
    Eval,
    /// Write and print the summary report.
    Report,
    /// Run every stage in order.
    Run {
        /// Include the provider evaluation stage.
        #[arg(long)]
        eval: bool,
    },
    /// Print the default configuration.
    Defaults,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::from_path(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn describe(outcome: &StageOutcome) -> String {
    match outcome {
        StageOutcome::Ran(m) => format!("{}: done in {} ms", m.stage, m.wall_time_ms),
        StageOutcome::Skipped(stage) => format!("{stage}: up to date"),
    }
}

fn print_report(pipeline: &Pipeline) -> Result<(), PipelineError> {
    let path = pipeline.out_dir().join(artifacts::REPORT);
    let text = std::fs::read_to_string(&path).map_err(|source| PipelineError::Io { path, source })?;
    print!("{text}");
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    if let Command::Defaults = cli.command {
        print!("{}", PipelineConfig::default().to_toml());
        return Ok(());
    }
    let config = load_config(cli)?;
    let pipeline = Pipeline::open(config, cli.force)?;
    let stage = match &cli.command {
        Command::Synth => Stage::Synth,
        Command::Ingest => Stage::Ingest,
        Command::Embed => Stage::Embed,
        Command::Cluster => Stage::Cluster,
        Command::Represent => Stage::Represent,
        Command::Compare => Stage::Compare,
        Command::Jargon => Stage::Jargon,
        Command::Eval => Stage::Eval,
        Command::Report => Stage::Report,
        Command::Run { eval } => {
            for outcome in pipeline.run_all(*eval)? {
                eprintln!("{}", describe(&outcome));
            }
            return print_report(&pipeline);
        }
        Command::Defaults => unreachable!("handled above"),
    };
    let outcome = pipeline.run_stage(stage)?;
    eprintln!("{}", describe(&outcome));
    if stage == Stage::Report {
        print_report(&pipeline)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
