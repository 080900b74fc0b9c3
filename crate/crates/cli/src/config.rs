//! Run configuration: a TOML file overlaid with command-line flags,
//! resolved against the reference network into a fully concrete [`Plan`].
//!
//! Precedence, lowest to highest: built-in defaults, config file,
//! command-line flags. Unknown keys anywhere in the file are rejected with
//! the offending key named in the error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use irsnet::baselines::SchemeId;
use irsnet::channel::{Disk, NoiseMode, Rect, Scenario};
use irsnet::solver::SolverOptions;

/// Which experiment a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Per-iteration objective traces for one or more trials.
    Convergence,
    /// Mean sum-rate per scheme across a grid of SNR axis values.
    SnrSweep,
    /// Mean sum-rate per scheme across surface counts with random placement.
    IrsSweep,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Convergence => "convergence",
            Experiment::SnrSweep => "snr_sweep",
            Experiment::IrsSweep => "irs_sweep",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Errors from loading or resolving a configuration. These map to the
/// binary's exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Top-level schema of a run file. Every key is optional; missing keys fall
/// back to the built-in defaults for the experiment being run.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Must match the subcommand when present; a mismatch is an error
    /// rather than a silent reinterpretation of the file.
    pub experiment: Option<String>,
    /// Inline partial scenario, or a path to a TOML file holding one.
    pub scenario: Option<ScenarioSource>,
    pub trials: Option<u64>,
    /// Base seed; trial t uses `seed + t`.
    pub seed: Option<u64>,
    /// SNR axis value anchoring the power budget for `convergence` and
    /// `irs_sweep`.
    pub snr_db: Option<f64>,
    /// Grid for `snr_sweep`.
    pub snr_grid_db: Option<Vec<f64>>,
    /// Surface counts for `irs_sweep`.
    pub l_grid: Option<Vec<usize>>,
    pub schemes: Option<Vec<SchemeId>>,
    pub noise_mode: Option<NoiseMode>,
    pub solver: Option<SolverOptions>,
    pub output: Option<PathBuf>,
}

/// `scenario = "path/to/file.toml"` or an inline `[scenario]` table.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(ScenarioPatch),
}

// Hand-rolled instead of `#[serde(untagged)]`: the untagged machinery
// reports a failed table as "did not match any variant", losing the name
// of the offending key inside the table. Routing on the value's shape
// keeps the patch deserializer's precise error.
impl<'de> Deserialize<'de> for ScenarioSource {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let value = toml::Value::deserialize(deserializer)?;
        match value {
            toml::Value::String(s) => Ok(ScenarioSource::Path(PathBuf::from(s))),
            other => other
                .try_into()
                .map(ScenarioSource::Inline)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// Partial scenario: any subset of fields, applied over the reference
/// network. Surface geometry is special-cased because fixed positions and a
/// placement region are mutually exclusive: setting one clears the other.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPatch {
    pub num_pairs: Option<usize>,
    pub elements_per_surface: Option<Vec<usize>>,
    pub source_region: Option<Disk>,
    pub dest_region: Option<Disk>,
    pub irs_positions: Option<Vec<[f64; 2]>>,
    pub irs_region: Option<Rect>,
    pub t0_db: Option<f64>,
    pub d0: Option<f64>,
    pub rho_si: Option<f64>,
    pub rho_id: Option<f64>,
    pub sigma_r2: Option<f64>,
    pub sigma_d2: Option<f64>,
    /// Explicit budget; when omitted the experiment derives the budget from
    /// its SNR axis value instead.
    pub p_max: Option<f64>,
}

impl ScenarioPatch {
    fn is_empty_geometry(&self) -> bool {
        self.irs_positions.is_none() && self.irs_region.is_none()
    }

    fn apply(&self, mut base: Scenario) -> Result<Scenario, ConfigError> {
        if self.irs_positions.is_some() && self.irs_region.is_some() {
            return err("scenario sets both irs_positions and irs_region; they are mutually exclusive");
        }
        if let Some(v) = self.num_pairs {
            base.num_pairs = v;
        }
        if let Some(v) = &self.elements_per_surface {
            base.elements_per_surface = v.clone();
        }
        if let Some(v) = self.source_region {
            base.source_region = v;
        }
        if let Some(v) = self.dest_region {
            base.dest_region = v;
        }
        if !self.is_empty_geometry() {
            base.irs_positions = self.irs_positions.clone();
            base.irs_region = self.irs_region;
        }
        if let Some(v) = self.t0_db {
            base.t0_db = v;
        }
        if let Some(v) = self.d0 {
            base.d0 = v;
        }
        if let Some(v) = self.rho_si {
            base.rho_si = v;
        }
        if let Some(v) = self.rho_id {
            base.rho_id = v;
        }
        if let Some(v) = self.sigma_r2 {
            base.sigma_r2 = v;
        }
        if let Some(v) = self.sigma_d2 {
            base.sigma_d2 = v;
        }
        if let Some(v) = self.p_max {
            base.p_max = v;
        }
        Ok(base)
    }
}

/// Command-line overrides; `None` means the flag was not given.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub epsilon: Option<f64>,
    pub max_iter: Option<usize>,
    pub noise_mode: Option<NoiseMode>,
    pub snr_db: Option<f64>,
    pub out: Option<PathBuf>,
}

/// A fully resolved run: everything the drivers need, nothing optional.
#[derive(Debug, Clone)]
pub struct Plan {
    pub experiment: Experiment,
    /// Patched scenario. `p_max` here is only meaningful when
    /// `p_max_explicit` is set; otherwise each experiment derives the
    /// budget from its SNR axis value via the scenario's anchor.
    pub scenario: Scenario,
    pub p_max_explicit: bool,
    pub trials: u64,
    pub base_seed: u64,
    pub schemes: Vec<SchemeId>,
    pub solver: SolverOptions,
    pub noise_mode: NoiseMode,
    pub snr_db: f64,
    pub snr_grid_db: Vec<f64>,
    pub l_grid: Vec<usize>,
    /// Placement region for `irs_sweep`.
    pub sweep_region: Rect,
    /// Uniform per-surface element count for `irs_sweep`.
    pub sweep_elements: usize,
    pub output: PathBuf,
}

/// Placement rectangle used by `irs_sweep` when the scenario does not
/// specify one: the corridor between the source and destination disks,
/// slightly wider than the reference network's fixed surface rows.
pub const DEFAULT_SWEEP_REGION: Rect = Rect {
    x: [50.0, 250.0],
    y: [-60.0, 60.0],
};

pub fn load_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
}

fn load_scenario(source: &ScenarioSource, config_dir: &Path) -> Result<ScenarioPatch, ConfigError> {
    match source {
        ScenarioSource::Inline(patch) => Ok(patch.clone()),
        ScenarioSource::Path(p) => {
            let full = if p.is_relative() { config_dir.join(p) } else { p.clone() };
            let text = fs::read_to_string(&full).map_err(|e| {
                ConfigError(format!("cannot read scenario {}: {e}", full.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| ConfigError(format!("invalid scenario {}: {e}", full.display())))
        }
    }
}

/// Overlay defaults, file, and flags into a [`Plan`] for `experiment`.
pub fn resolve(
    experiment: Experiment,
    file: Option<(&Path, FileConfig)>,
    overrides: &Overrides,
) -> Result<Plan, ConfigError> {
    let (config_dir, file) = match file {
        Some((path, cfg)) => (
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
            cfg,
        ),
        None => (PathBuf::new(), FileConfig::default()),
    };

    if let Some(named) = &file.experiment {
        if named != experiment.as_str() {
            return err(format!(
                "config file says experiment = \"{named}\" but the {experiment} subcommand was invoked"
            ));
        }
    }

    let patch = match &file.scenario {
        Some(src) => load_scenario(src, &config_dir)?,
        None => ScenarioPatch::default(),
    };
    let p_max_explicit = patch.p_max.is_some();
    let scenario = patch.apply(Scenario::default())?;
    scenario
        .validate()
        .map_err(|e| ConfigError(format!("invalid scenario: {e}")))?;

    if p_max_explicit && experiment == Experiment::SnrSweep {
        return err("snr_sweep derives p_max from each grid point; remove scenario.p_max");
    }

    let mut solver = file.solver.unwrap_or_default();
    if let Some(v) = overrides.epsilon {
        solver.epsilon = v;
    }
    if let Some(v) = overrides.max_iter {
        solver.max_iter = v;
    }
    if !(solver.epsilon > 0.0) {
        return err(format!("solver.epsilon must be positive, got {}", solver.epsilon));
    }
    if solver.max_iter == 0 {
        return err("solver.max_iter must be at least 1");
    }
    if !(solver.theta_tol_kkt > 0.0) {
        return err(format!(
            "solver.theta_tol_kkt must be positive, got {}",
            solver.theta_tol_kkt
        ));
    }

    let trials = overrides
        .trials
        .or(file.trials)
        .unwrap_or(match experiment {
            Experiment::Convergence => 1,
            _ => 100,
        });
    if trials == 0 {
        return err("trials must be at least 1");
    }

    let snr_db = overrides.snr_db.or(file.snr_db).unwrap_or(35.0);
    let snr_grid_db = file.snr_grid_db.unwrap_or_else(|| vec![15.0, 25.0, 35.0]);
    if experiment == Experiment::SnrSweep {
        if snr_grid_db.is_empty() {
            return err("snr_grid_db must be nonempty for snr_sweep");
        }
        if snr_grid_db.iter().any(|s| !s.is_finite()) {
            return err("snr_grid_db values must be finite");
        }
    }
    let l_grid = file.l_grid.unwrap_or_else(|| vec![2, 4, 6, 8]);
    if experiment == Experiment::IrsSweep {
        if l_grid.is_empty() {
            return err("l_grid must be nonempty for irs_sweep");
        }
        if l_grid.contains(&0) {
            return err("l_grid entries must be at least 1");
        }
    }

    // Convergence traces one optimizer per trial, so a mixed-scheme default
    // would interleave unrelated objective columns; sweeps compare all three.
    let schemes = file.schemes.unwrap_or_else(|| match experiment {
        Experiment::Convergence => vec![SchemeId::Joint],
        _ => SchemeId::ALL.to_vec(),
    });
    if schemes.is_empty() {
        return err("schemes must be nonempty");
    }

    let sweep_elements = match &scenario.elements_per_surface[..] {
        [] => return err("elements_per_surface must be nonempty"),
        [first, rest @ ..] => {
            if experiment == Experiment::IrsSweep && rest.iter().any(|m| m != first) {
                return err("irs_sweep needs a uniform per-surface element count");
            }
            *first
        }
    };

    let output = overrides
        .out
        .clone()
        .or(file.output)
        .unwrap_or_else(|| PathBuf::from(format!("{experiment}.csv")));

    Ok(Plan {
        experiment,
        sweep_region: scenario.irs_region.unwrap_or(DEFAULT_SWEEP_REGION),
        scenario,
        p_max_explicit,
        trials,
        base_seed: overrides.seed.or(file.seed).unwrap_or(0),
        schemes,
        solver,
        noise_mode: overrides.noise_mode.or(file.noise_mode).unwrap_or_default(),
        snr_db,
        snr_grid_db,
        l_grid,
        sweep_elements,
        output,
    })
}
