//! `ghostshield` command-line experiments.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::{CliError, CliResult};
use output::{sha256_hex, OutputDir, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "ghostshield", version, about = "Jamming detection and recovery for polarization ghost imaging")]
struct Cli {
    /// Experiment config (TOML). Defaults describe the reference scenario.
    #[arg(long, global = true, env = "GHOSTSHIELD_CONFIG")]
    config: Option<PathBuf>,

    /// Random seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Worst-case detection and false-alarm probabilities over jamming levels.
    DetectCurve,
    /// Simulate jammed, clean and recovered images.
    Simulate,
    /// Test two measured images for intrusion and recover the true image.
    Analyze {
        /// Image taken with the first legitimate state (PGM).
        first: PathBuf,
        /// Image taken with the second legitimate state (PGM).
        second: PathBuf,
    },
    /// Min-max separation for one state pair or the single-photon game.
    WorstCase,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::DetectCurve => "detect-curve",
            Command::Simulate => "simulate",
            Command::Analyze { .. } => "analyze",
            Command::WorstCase => "worst-case",
        }
    }
}

fn effective_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Digest of the experiment parameters; the output location is excluded so
/// that the same experiment written to two places has one digest.
fn config_digest(cfg: &ExperimentConfig) -> String {
    let mut anon = cfg.clone();
    anon.output.dir = PathBuf::new();
    sha256_hex(anon.to_toml().as_bytes())
}

fn run(cli: Cli) -> CliResult<()> {
    let start = Instant::now();
    let cfg = effective_config(&cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} threads: {e}", cli.threads)))?;

    let mut out = OutputDir::create(&cfg.output.dir)?;
    let summary = pool.install(|| match &cli.command {
        Command::DetectCurve => commands::detect_curve(&cfg, &mut out),
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Analyze { first, second } => commands::analyze(&cfg, first, second, &mut out),
        Command::WorstCase => commands::worst_case(&cfg, &mut out),
    })?;
    out.write_derived("config.toml", cfg.to_toml().as_bytes())?;
    out.finish(RunManifest {
        software: format!("ghostshield {}", env!("CARGO_PKG_VERSION")),
        command: cli.command.name().into(),
        config_digest: config_digest(&cfg),
        seed: cfg.seed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: Default::default(),
    })?;
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(error::EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
