//! `aggft`: run aggregation rounds, compare against the baseline protocol
//! and play privacy games from JSON files.

mod report;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aggft::baseline::{baseline_network, default_step_cap, run_baseline_round, BaselineParams};
use aggft::game::adversary::{strategy, STRATEGIES};
use aggft::game::{empirical_unlinkability, GameSetup};
use aggft::net::write_trace_jsonl;
use aggft::{run_scenario, BackendKind, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use report::{digest, ComparisonReport, GameReport, RunReport};

#[derive(Parser)]
#[command(name = "aggft", version, about = "Fault-tolerant privacy-preserving aggregation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one aggregation round and print a summary report.
    Run {
        path: PathBuf,
        #[arg(long, value_enum)]
        backend: Option<BackendChoice>,
        /// Write the message trace as JSON lines.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the same scenario through the new protocol and the baseline.
    Baseline {
        path: PathBuf,
        #[arg(long, value_enum)]
        backend: Option<BackendChoice>,
        #[command(flatten)]
        common: Common,
    },
    /// Play repeated unlinkability games from a game configuration.
    Game {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Replace the seed from the input file.
    #[arg(long)]
    seed: Option<u64>,
    /// Compact JSON output (the default).
    #[arg(long, conflicts_with = "pretty")]
    json: bool,
    /// Indented JSON output.
    #[arg(long)]
    pretty: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendChoice {
    Masking,
    Paillier,
}

impl BackendChoice {
    /// Keeps the configured size when the kind already matches.
    fn apply(self, current: BackendKind) -> BackendKind {
        match (self, current) {
            (BackendChoice::Masking, BackendKind::Masking { .. }) | (BackendChoice::Paillier, BackendKind::Paillier { .. }) => {
                current
            }
            (BackendChoice::Masking, _) => BackendKind::Masking { k_bits: 64 },
            (BackendChoice::Paillier, _) => BackendKind::Paillier { key_bits: 256 },
        }
    }
}

/// A game configuration file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameConfig {
    setup: GameSetup,
    adversary: String,
    trials: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Parse { .. } | CliError::Invalid { .. } => 2,
        }
    }

    fn invalid(path: &Path, message: impl ToString) -> Self {
        CliError::Invalid {
            path: path.to_owned(),
            message: message.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_owned(),
        None => message.to_owned(),
    }
}

fn load_scenario(path: &Path, backend: Option<BackendChoice>, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut s: Scenario = parse(path)?;
    if let Some(b) = backend {
        s.backend = b.apply(s.backend);
    }
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

fn emit<T: Serialize>(value: &T, common: &Common) -> Result<(), CliError> {
    let text = if common.pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .expect("reports serialize");
    let mut out = io::stdout().lock();
    writeln!(out, "{text}").map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn cmd_run(path: &Path, backend: Option<BackendChoice>, trace_out: Option<&Path>, common: &Common) -> Result<(), CliError> {
    let scenario = load_scenario(path, backend, common.seed)?;
    let out = run_scenario(scenario.clone()).map_err(|e| CliError::invalid(path, e))?;
    if let Some(trace_path) = trace_out {
        let io_err = |source| CliError::Io {
            path: trace_path.to_owned(),
            source,
        };
        let mut w = BufWriter::new(File::create(trace_path).map_err(io_err)?);
        write_trace_jsonl(&out.trace, &mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    let report = RunReport::new(&scenario, &out).map_err(|e| CliError::invalid(path, e))?;
    emit(&report, common)
}

fn cmd_baseline(path: &Path, backend: Option<BackendChoice>, common: &Common) -> Result<(), CliError> {
    let scenario = load_scenario(path, backend, common.seed)?;
    let valid = scenario.clone().validate().map_err(|e| CliError::invalid(path, e))?;
    let aggft = run_scenario(scenario.clone()).map_err(|e| CliError::invalid(path, e))?;
    let params = BaselineParams::for_scenario(&valid);
    let baseline = run_baseline_round(&valid, &params, &mut baseline_network(&valid), default_step_cap(valid.n_sm))
        .map_err(|e| CliError::invalid(path, e))?;
    emit(
        &ComparisonReport {
            scenario_digest: digest(&scenario),
            aggft: (&aggft).into(),
            baseline: (&baseline).into(),
        },
        common,
    )
}

fn cmd_game(path: &Path, common: &Common) -> Result<(), CliError> {
    let config: GameConfig = parse(path)?;
    let adversary = strategy(&config.adversary).ok_or_else(|| {
        let known: Vec<_> = STRATEGIES.iter().map(|(n, _)| *n).collect();
        CliError::invalid(path, format!("unknown adversary {:?}; known: {}", config.adversary, known.join(", ")))
    })?;
    let seed = common.seed.unwrap_or(config.seed);
    let result =
        empirical_unlinkability(&config.setup, adversary, config.trials, seed).map_err(|e| CliError::invalid(path, e))?;
    emit(
        &GameReport {
            adversary: config.adversary,
            result,
        },
        common,
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            path,
            backend,
            trace_out,
            common,
        } => cmd_run(path, *backend, trace_out.as_deref(), common),
        Command::Baseline { path, backend, common } => cmd_baseline(path, *backend, common),
        Command::Game { path, common } => cmd_game(path, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
