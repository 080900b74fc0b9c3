//! Experiment drivers: turn a resolved [`Plan`] into result rows and write
//! them out as CSV plus a JSON summary.
//!
//! Every run is deterministic given the plan: trial `t` uses seed
//! `base_seed + t`, from which the layout, fading, and solver
//! initialization each derive an independent stream. Rows are sorted by
//! `(scheme, sweep_value, trial)` before writing, so any future
//! parallelization over trials cannot change the output. The only
//! nondeterministic column is `wall_ms`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use irsnet::baselines::{run_scheme, SchemeId};
use irsnet::channel::{self, EffectiveChannels, NoiseMode, Scenario};
use irsnet::instances::derive_seed;
use irsnet::solver::{ConvergenceTrace, SolverOptions, StopReason};

use crate::config::{Experiment, Plan};

pub const CSV_HEADER: &str =
    "experiment,scheme,seed,trial,sweep_value,f1,sum_rate,iterations,wall_ms,fast_path_fraction";

/// Index of the one nondeterministic CSV column, for rerun comparisons.
pub const WALL_MS_COLUMN: usize = 8;

/// One output record. For sweeps there is one row per
/// `(scheme, sweep point, trial)` holding that run's final values; for
/// convergence there is one row per iteration with `sweep_value = t`.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub scheme: SchemeId,
    pub seed: u64,
    pub trial: u64,
    pub sweep_value: f64,
    pub f1: f64,
    pub sum_rate: f64,
    pub iterations: usize,
    pub wall_ms: u128,
    pub fast_path_fraction: f64,
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.scheme,
            self.seed,
            self.trial,
            self.sweep_value,
            self.f1,
            self.sum_rate,
            self.iterations,
            self.wall_ms,
            self.fast_path_fraction
        )
    }
}

/// Aggregates over the trials of one `(scheme, sweep point)` cell.
#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub scheme: String,
    pub sweep_value: f64,
    pub n: usize,
    pub mean_sum_rate: f64,
    /// Sample standard deviation (zero for a single trial).
    pub std_sum_rate: f64,
    pub mean_iterations: f64,
    /// How many runs stopped on the objective-increment test rather than
    /// the iteration cap.
    pub epsilon_reached: usize,
}

/// Final state of one convergence run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scheme: String,
    pub trial: u64,
    pub seed: u64,
    pub iterations: usize,
    pub final_f1: f64,
    pub final_sum_rate: f64,
    pub stop_reason: String,
    pub fast_path_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub trials: u64,
    pub base_seed: u64,
    pub noise_mode: String,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Per-cell aggregates (sweeps).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupSummary>,
    /// Per-run finals (convergence).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunSummary>,
}

/// Everything one experiment produced; writing is a separate step.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
    pub metadata: Vec<String>,
}

fn noise_mode_str(mode: NoiseMode) -> &'static str {
    match mode {
        NoiseMode::Expectation => "expectation",
        NoiseMode::Realization => "realization",
    }
}

fn stop_reason_str(reason: StopReason) -> &'static str {
    match reason {
        StopReason::EpsilonReached => "epsilon_reached",
        StopReason::MaxIterations => "max_iterations",
    }
}

/// Channel realization for one trial of `scenario`: layout and fading draw
/// independent streams off the trial seed, so adding a consumer to one
/// never shifts the other.
pub fn effective_for_trial(
    scenario: &Scenario,
    trial_seed: u64,
    noise_mode: NoiseMode,
) -> Result<EffectiveChannels> {
    let layout = channel::sample_layout(scenario, derive_seed(trial_seed, 1));
    let real = channel::sample_channels(scenario, &layout, derive_seed(trial_seed, 2))
        .context("sampling channels")?;
    channel::assemble_effective(&real, noise_mode, scenario.sigma_r2)
        .context("assembling effective channels")
}

fn solver_for_trial(base: &SolverOptions, trial_seed: u64) -> SolverOptions {
    SolverOptions {
        seed: derive_seed(trial_seed, 3),
        ..base.clone()
    }
}

struct SchemeRun {
    sum_rate: f64,
    trace: ConvergenceTrace,
    wall_ms: u128,
}

fn run_one(
    scheme: SchemeId,
    scenario: &Scenario,
    p_max: f64,
    trial_seed: u64,
    plan: &Plan,
) -> Result<SchemeRun> {
    let eff = effective_for_trial(scenario, trial_seed, plan.noise_mode)?;
    let options = solver_for_trial(&plan.solver, trial_seed);
    let started = Instant::now();
    let (_, report, trace) = run_scheme(scheme, &eff, p_max, scenario.sigma_d2, &options);
    Ok(SchemeRun {
        sum_rate: report.sum,
        trace,
        wall_ms: started.elapsed().as_millis(),
    })
}

/// Budget for a sweep point: an explicit `p_max` wins, otherwise the axis
/// value is converted through the *base* scenario's anchor so that one
/// sweep shares a single reference gain (an `irs_sweep` would otherwise
/// change the budget alongside the surface count, confounding the trend).
fn budget(plan: &Plan, snr_db: f64) -> f64 {
    if plan.p_max_explicit {
        plan.scenario.p_max
    } else {
        plan.scenario.power_for_snr_db(snr_db)
    }
}

pub fn run(plan: &Plan) -> Result<RunOutput> {
    let mut rows = match plan.experiment {
        Experiment::Convergence => run_convergence(plan)?,
        Experiment::SnrSweep => run_snr_sweep(plan)?,
        Experiment::IrsSweep => run_irs_sweep(plan)?,
    };
    rows.sort_by(|a, b| {
        let ka = (scheme_index(a.scheme), a.sweep_value, a.trial);
        let kb = (scheme_index(b.scheme), b.sweep_value, b.trial);
        ka.partial_cmp(&kb).expect("sweep values are finite")
    });
    let summary = summarize(plan, &rows);
    let metadata = metadata_lines(plan);
    Ok(RunOutput {
        rows,
        summary,
        metadata,
    })
}

fn scheme_index(scheme: SchemeId) -> usize {
    SchemeId::ALL.iter().position(|s| *s == scheme).unwrap()
}

fn run_convergence(plan: &Plan) -> Result<Vec<ResultRow>> {
    let p_max = budget(plan, plan.snr_db);
    let mut rows = Vec::new();
    for trial in 0..plan.trials {
        let trial_seed = plan.base_seed.wrapping_add(trial);
        for &scheme in &plan.schemes {
            let run = run_one(scheme, &plan.scenario, p_max, trial_seed, plan)?;
            // Cumulative wall time: row t says how long reaching iteration
            // t took, which is what a convergence-versus-time reading needs.
            let mut elapsed_ms = 0u128;
            for rec in &run.trace.records {
                elapsed_ms += rec.wall.as_millis();
                rows.push(ResultRow {
                    experiment: plan.experiment,
                    scheme,
                    seed: trial_seed,
                    trial,
                    sweep_value: rec.iter as f64,
                    f1: rec.f1,
                    sum_rate: rec.sum_rate,
                    iterations: rec.iter,
                    wall_ms: elapsed_ms,
                    fast_path_fraction: run.trace.fast_path_fraction,
                });
            }
        }
    }
    Ok(rows)
}

fn run_snr_sweep(plan: &Plan) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &snr_db in &plan.snr_grid_db {
        let p_max = budget(plan, snr_db);
        let scenario = Scenario {
            p_max,
            ..plan.scenario.clone()
        };
        for trial in 0..plan.trials {
            let trial_seed = plan.base_seed.wrapping_add(trial);
            for &scheme in &plan.schemes {
                let run = run_one(scheme, &scenario, p_max, trial_seed, plan)?;
                rows.push(final_row(plan, scheme, trial_seed, trial, snr_db, &run));
            }
        }
    }
    Ok(rows)
}

fn run_irs_sweep(plan: &Plan) -> Result<Vec<ResultRow>> {
    // One budget for the whole sweep, anchored on the base scenario.
    let p_max = budget(plan, plan.snr_db);
    let mut rows = Vec::new();
    for &l in &plan.l_grid {
        let scenario = Scenario {
            elements_per_surface: vec![plan.sweep_elements; l],
            irs_positions: None,
            irs_region: Some(plan.sweep_region),
            p_max,
            ..plan.scenario.clone()
        };
        scenario
            .validate()
            .with_context(|| format!("irs_sweep scenario at L = {l}"))?;
        for trial in 0..plan.trials {
            let trial_seed = plan.base_seed.wrapping_add(trial);
            for &scheme in &plan.schemes {
                let run = run_one(scheme, &scenario, p_max, trial_seed, plan)?;
                rows.push(final_row(plan, scheme, trial_seed, trial, l as f64, &run));
            }
        }
    }
    Ok(rows)
}

fn final_row(
    plan: &Plan,
    scheme: SchemeId,
    seed: u64,
    trial: u64,
    sweep_value: f64,
    run: &SchemeRun,
) -> ResultRow {
    ResultRow {
        experiment: plan.experiment,
        scheme,
        seed,
        trial,
        sweep_value,
        f1: run.trace.final_f1(),
        sum_rate: run.sum_rate,
        iterations: run.trace.iterations(),
        wall_ms: run.wall_ms,
        fast_path_fraction: run.trace.fast_path_fraction,
    }
}

fn summarize(plan: &Plan, rows: &[ResultRow]) -> Summary {
    let mut summary = Summary {
        experiment: plan.experiment.to_string(),
        trials: plan.trials,
        base_seed: plan.base_seed,
        noise_mode: noise_mode_str(plan.noise_mode).to_string(),
        epsilon: plan.solver.epsilon,
        max_iter: plan.solver.max_iter,
        groups: Vec::new(),
        runs: Vec::new(),
    };
    match plan.experiment {
        Experiment::Convergence => {
            // One entry per run: the last row of each (scheme, trial).
            for &scheme in &plan.schemes {
                for trial in 0..plan.trials {
                    let last = rows
                        .iter()
                        .filter(|r| r.scheme == scheme && r.trial == trial)
                        .max_by_key(|r| r.iterations);
                    if let Some(last) = last {
                        summary.runs.push(RunSummary {
                            scheme: scheme.to_string(),
                            trial,
                            seed: last.seed,
                            iterations: last.iterations,
                            final_f1: last.f1,
                            final_sum_rate: last.sum_rate,
                            stop_reason: if last.iterations < plan.solver.max_iter {
                                stop_reason_str(StopReason::EpsilonReached).to_string()
                            } else {
                                // The cap and an epsilon stop can coincide;
                                // re-deriving from the trace is not possible
                                // from rows alone, so the cap is reported.
                                stop_reason_str(StopReason::MaxIterations).to_string()
                            },
                            fast_path_fraction: last.fast_path_fraction,
                        });
                    }
                }
            }
        }
        Experiment::SnrSweep | Experiment::IrsSweep => {
            let mut points: Vec<f64> = rows.iter().map(|r| r.sweep_value).collect();
            points.sort_by(|a, b| a.partial_cmp(b).unwrap());
            points.dedup();
            for &scheme in &plan.schemes {
                for &point in &points {
                    let cell: Vec<&ResultRow> = rows
                        .iter()
                        .filter(|r| r.scheme == scheme && r.sweep_value == point)
                        .collect();
                    if cell.is_empty() {
                        continue;
                    }
                    let n = cell.len();
                    let mean = cell.iter().map(|r| r.sum_rate).sum::<f64>() / n as f64;
                    let var = if n > 1 {
                        cell.iter()
                            .map(|r| (r.sum_rate - mean).powi(2))
                            .sum::<f64>()
                            / (n - 1) as f64
                    } else {
                        0.0
                    };
                    summary.groups.push(GroupSummary {
                        scheme: scheme.to_string(),
                        sweep_value: point,
                        n,
                        mean_sum_rate: mean,
                        std_sum_rate: var.sqrt(),
                        mean_iterations: cell.iter().map(|r| r.iterations as f64).sum::<f64>()
                            / n as f64,
                        epsilon_reached: cell
                            .iter()
                            .filter(|r| r.iterations < plan.solver.max_iter)
                            .count(),
                    });
                }
            }
        }
    }
    summary
}

fn fmt_f64_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Resolved-configuration echo written as `#`-prefixed lines ahead of the
/// CSV header. Deliberately free of timestamps and host details so reruns
/// are comparable byte for byte.
fn metadata_lines(plan: &Plan) -> Vec<String> {
    let sc = &plan.scenario;
    let mut lines = vec![
        format!("experiment = {}", plan.experiment),
        format!(
            "schemes = {}",
            plan.schemes
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(",")
        ),
        format!("trials = {}", plan.trials),
        format!("base_seed = {}", plan.base_seed),
        format!("noise_mode = {}", noise_mode_str(plan.noise_mode)),
        format!("epsilon = {}", plan.solver.epsilon),
        format!("max_iter = {}", plan.solver.max_iter),
        format!("theta_tol_kkt = {}", plan.solver.theta_tol_kkt),
        format!("num_pairs = {}", sc.num_pairs),
        format!(
            "elements_per_surface = {}",
            sc.elements_per_surface
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        format!(
            "source_region = disk({},{};r={})",
            sc.source_region.center[0], sc.source_region.center[1], sc.source_region.radius
        ),
        format!(
            "dest_region = disk({},{};r={})",
            sc.dest_region.center[0], sc.dest_region.center[1], sc.dest_region.radius
        ),
        format!("t0_db = {}", sc.t0_db),
        format!("rho_si = {}", sc.rho_si),
        format!("rho_id = {}", sc.rho_id),
        format!("sigma_r2 = {}", sc.sigma_r2),
        format!("sigma_d2 = {}", sc.sigma_d2),
    ];
    match plan.experiment {
        Experiment::Convergence => {
            lines.push(format!("snr_db = {}", plan.snr_db));
            lines.push(format!("p_max = {}", budget(plan, plan.snr_db)));
        }
        Experiment::SnrSweep => {
            lines.push(format!("snr_grid_db = {}", fmt_f64_list(&plan.snr_grid_db)));
            let budgets: Vec<f64> = plan
                .snr_grid_db
                .iter()
                .map(|&s| budget(plan, s))
                .collect();
            lines.push(format!("p_max_grid = {}", fmt_f64_list(&budgets)));
        }
        Experiment::IrsSweep => {
            lines.push(format!(
                "l_grid = {}",
                plan.l_grid
                    .iter()
                    .map(|l| l.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ));
            lines.push(format!("snr_db = {}", plan.snr_db));
            lines.push(format!("p_max = {}", budget(plan, plan.snr_db)));
            let r = plan.sweep_region;
            lines.push(format!(
                "irs_region = rect(x=[{},{}],y=[{},{}])",
                r.x[0], r.x[1], r.y[0], r.y[1]
            ));
            lines.push(format!("sweep_elements = {}", plan.sweep_elements));
        }
    }
    lines
}

pub fn render_csv(output: &RunOutput) -> String {
    let mut text = String::new();
    for line in &output.metadata {
        let _ = writeln!(text, "# {line}");
    }
    let _ = writeln!(text, "{CSV_HEADER}");
    for row in &output.rows {
        let _ = writeln!(text, "{}", row.to_csv());
    }
    text
}

/// Write the CSV to `path` and the JSON summary next to it
/// (`<stem>.summary.json`). Returns the summary path.
pub fn write_outputs(output: &RunOutput, path: &Path) -> Result<std::path::PathBuf> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
        }
    }
    fs::write(path, render_csv(output))
        .with_context(|| format!("writing {}", path.display()))?;
    let summary_path = path.with_extension("summary.json");
    let json = serde_json::to_string_pretty(&output.summary).context("encoding summary")?;
    fs::write(&summary_path, json + "\n")
        .with_context(|| format!("writing {}", summary_path.display()))?;
    Ok(summary_path)
}
