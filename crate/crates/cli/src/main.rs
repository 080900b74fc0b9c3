//! `irsnet` — experiment runner for the distributed-surface sum-rate
//! optimizer.
//!
//! Subcommands map one-to-one onto experiments (`convergence`,
//! `snr-sweep`, `irs-sweep`) plus `validate`, the self-check suite. Runs
//! are configured by an optional TOML file overridden by flags, and write
//! a CSV of raw rows plus a JSON summary next to it.
//!
//! Exit codes: 0 success, 1 runtime failure (e.g. unwritable output),
//! 2 configuration error, 3 failed validation checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use irsnet::channel::NoiseMode;
use irsnet_cli::config::{self, Experiment, Overrides};
use irsnet_cli::runner;
use irsnet_cli::validate;

#[derive(Parser)]
#[command(
    name = "irsnet",
    version,
    about = "Sum-rate experiments for a distributed reflecting-surface interference network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-iteration objective traces for one or more trials.
    Convergence(RunArgs),
    /// Mean sum-rate per scheme across an SNR grid.
    SnrSweep(RunArgs),
    /// Mean sum-rate per scheme across surface counts with random placement.
    IrsSweep(RunArgs),
    /// Run the self-check suite and print a pass/fail report.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseModeArg {
    Expectation,
    Realization,
}

impl From<NoiseModeArg> for NoiseMode {
    fn from(arg: NoiseModeArg) -> Self {
        match arg {
            NoiseModeArg::Expectation => NoiseMode::Expectation,
            NoiseModeArg::Realization => NoiseMode::Realization,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of channel realizations.
    #[arg(long)]
    trials: Option<u64>,
    /// Stop once the objective improves by no more than this.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Outer-iteration cap per run.
    #[arg(long)]
    max_iter: Option<usize>,
    /// How re-radiated surface noise enters the rates.
    #[arg(long, value_enum)]
    noise_mode: Option<NoiseModeArg>,
    /// SNR axis value for experiments with a single operating point.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Output CSV path; the JSON summary lands next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Sample-count scale for the checks.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Also write the report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> ExitCode {
    let overrides = Overrides {
        seed: args.seed,
        trials: args.trials,
        epsilon: args.epsilon,
        max_iter: args.max_iter,
        noise_mode: args.noise_mode.map(NoiseMode::from),
        snr_db: args.snr_db,
        out: args.out.clone(),
    };
    let file = match &args.config {
        Some(path) => match config::load_file(path) {
            Ok(cfg) => Some((path.as_path(), cfg)),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let plan = match config::resolve(experiment, file, &overrides) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let output = match runner::run(&plan) {
        Ok(output) => output,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match runner::write_outputs(&output, &plan.output) {
        Ok(summary_path) => {
            println!(
                "{}: {} rows -> {} (summary {})",
                plan.experiment,
                output.rows.len(),
                plan.output.display(),
                summary_path.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run_validate(args: &ValidateArgs) -> ExitCode {
    let outcomes = validate::run_validation(args.seeds.max(1));
    let report = validate::render_report(&outcomes);
    print!("{report}");
    if let Some(path) = &args.out {
        if let Err(e) = std::fs::write(path, &report) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if outcomes.iter().all(|o| o.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Convergence(args) => run_experiment(Experiment::Convergence, args),
        Command::SnrSweep(args) => run_experiment(Experiment::SnrSweep, args),
        Command::IrsSweep(args) => run_experiment(Experiment::IrsSweep, args),
        Command::Validate(args) => run_validate(args),
    }
}
