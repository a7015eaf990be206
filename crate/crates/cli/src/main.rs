//! `dtsync`: simulation harness for joint communication–computation resource
//! allocation for digital-twin synchronization.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dtsync_core::harness::{
    load_config, rows_to_csv, rows_to_json, run_cell, run_sweep, Algorithm, SweepSpec,
};
use dtsync_core::model::{derive_seed, EvalMode};

#[derive(Parser)]
#[command(
    name = "dtsync",
    about = "Delay-minimizing scheduling, power control, and data offloading for digital-twin synchronization over wireless networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Expected,
    Montecarlo,
}

#[derive(Args)]
struct CommonEval {
    /// Evaluation mode for accuracy/energy reporting.
    #[arg(long, value_enum, default_value = "expected")]
    mode: Mode,
    /// Monte Carlo trials (montecarlo mode only).
    #[arg(long, default_value_t = 10_000)]
    trials: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single scenario and report one result row.
    Run {
        /// Scenario configuration (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Channel seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Algorithm: proposed | random | equal_power | single_device.
        #[arg(long, default_value = "proposed")]
        algo: String,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format.
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
        #[command(flatten)]
        eval: CommonEval,
    },
    /// Run a sweep specification file (one row per value/seed/algorithm).
    Sweep {
        /// Sweep specification (JSON); may embed a `base` scenario config.
        #[arg(long)]
        config: PathBuf,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format.
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
        #[command(flatten)]
        eval: CommonEval,
    },
    /// Run the built-in oracle and property checks.
    Verify {
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn eval_mode(eval: &CommonEval, seed: u64) -> EvalMode {
    match eval.mode {
        Mode::Expected => EvalMode::Expected,
        Mode::Montecarlo => EvalMode::MonteCarlo {
            seed: derive_seed(seed, 0x4d43, 0),
            trials: eval.trials,
        },
    }
}

fn emit(text: String, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

mod verify;

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            algo,
            out,
            format,
            eval,
        } => {
            let raw = load_config(config.as_deref()).context("loading config")?;
            let scenario = raw.to_scenario().context("validating config")?;
            let algorithm = Algorithm::parse(&algo)?;
            let mode = eval_mode(&eval, seed);
            let row = run_cell(&scenario, seed, algorithm, mode, "none", 0.0, 0);
            let ok = row.status == "ok";
            let text = match format {
                OutputFormat::Csv => rows_to_csv(std::slice::from_ref(&row)),
                OutputFormat::Json => rows_to_json(std::slice::from_ref(&row)),
            };
            emit(text, out.as_ref())?;
            if !ok {
                bail!("run failed: {}", row.status);
            }
        }
        Command::Sweep {
            config,
            out,
            format,
            eval,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let spec: SweepSpec = serde_json::from_str(&text).context("parsing sweep spec")?;
            spec.validate()?;
            let base = spec
                .base
                .clone()
                .unwrap_or_else(|| load_config(None).expect("defaults"));
            let mode = eval_mode(&eval, spec.seeds[0]);
            let rows = run_sweep(&spec, &base, mode);
            let text = match format {
                OutputFormat::Csv => rows_to_csv(&rows),
                OutputFormat::Json => rows_to_json(&rows),
            };
            emit(text, out.as_ref())?;
        }
        Command::Verify { seed } => {
            let failures = verify::run_all(seed);
            if failures > 0 {
                bail!("{failures} verification check(s) failed");
            }
            println!("all verification checks passed");
        }
    }
    Ok(())
}
