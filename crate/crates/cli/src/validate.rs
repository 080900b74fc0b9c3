//! Self-validation: a condensed invariant suite runnable from the binary.
//!
//! Each check exercises one mathematical contract of the optimizer on
//! seeded random instances — monotone objective traces, the multiplier
//! reformulation identity, surrogate tightness and dominance, dual
//! certificates of the reflection subproblem, and run determinism. The
//! suite is a smoke screen for installations and refactors, not a
//! replacement for the full test suite; it keeps to a few seconds.

use std::fmt::Write as _;

use irsnet::channel::NoiseMode;
use irsnet::instances;
use irsnet::oracle;
use irsnet::qcqp;
use irsnet::rate;
use irsnet::solver::{solve, SolverOptions};

/// One check's verdict. `detail` is a single human-readable measurement
/// (worst case seen, sample count) regardless of pass or fail.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "{:<24} {}  {}",
            self.name,
            if self.pass { "ok  " } else { "FAIL" },
            self.detail
        )
    }
}

fn mode_for(seed: u64) -> NoiseMode {
    if seed % 2 == 0 {
        NoiseMode::Expectation
    } else {
        NoiseMode::Realization
    }
}

/// Mixed-size random instance: K ∈ {2,3,4}, L ∈ {1,2}, M ∈ {2,3}.
fn instance(seed: u64) -> irsnet::channel::EffectiveChannels {
    let pairs = 2 + (seed % 3) as usize;
    let surfaces = 1 + (seed % 2) as usize;
    let elements = 2 + ((seed / 2) % 2) as usize;
    let sc = instances::synthetic_scenario(pairs, surfaces, elements, 1.0, 0.05, 0.1);
    instances::random_effective(&sc, seed, mode_for(seed)).expect("valid synthetic scenario")
}

fn monotone_traces(seeds: u64) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut violations = 0usize;
    for seed in 0..seeds {
        let eff = instance(seed);
        let options = SolverOptions {
            epsilon: 1e-7,
            max_iter: 60,
            seed,
            ..Default::default()
        };
        let (state, trace) = solve(&eff, 1.0, 0.1, &options);
        let report = oracle::check_monotone(&trace.f1_values(), 1e-9);
        if !report.pass {
            violations += 1;
        }
        worst = worst.max(report.worst_drop);
        if state.p.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p))
            || state.theta.iter().any(|t| t.norm_sqr() > 1.0 + 1e-8)
        {
            violations += 1;
        }
    }
    CheckOutcome {
        name: "monotone_traces",
        pass: violations == 0,
        detail: format!("{violations} violations / {seeds} runs, worst drop {worst:.2e}"),
    }
}

fn reformulation_identity(samples: u64) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for seed in 0..samples {
        let eff = instance(seed);
        let k = eff.num_users;
        let n = eff.num_elements;
        let p = instances::random_power(instances::derive_seed(seed, 10), k, 0.0, 1.0);
        let theta = instances::random_feasible_theta(instances::derive_seed(seed, 11), n);
        let mu = rate::update_mu(&p, &theta, &eff, 0.1);
        let f1 = rate::eval_f1(&p, &theta, &mu, &eff, 0.1);
        let rsum = rate::sum_rate(&p, &theta, &eff, 0.1);
        let rel = (f1 - rsum).abs() / rsum.abs().max(1.0);
        worst = worst.max(rel);
    }
    CheckOutcome {
        name: "reformulation_identity",
        pass: worst <= 1e-12,
        detail: format!("max rel err {worst:.2e} over {samples} states"),
    }
}

fn surrogate_tightness(samples: u64) -> CheckOutcome {
    let mut worst_tight: f64 = 0.0;
    let mut dominance_violations = 0usize;
    for seed in 0..samples {
        let eff = instance(seed);
        let k = eff.num_users;
        let n = eff.num_elements;
        let p = instances::random_power(instances::derive_seed(seed, 20), k, 1e-3, 1.0);
        let theta = instances::random_feasible_theta(instances::derive_seed(seed, 21), n);
        let mu = rate::update_mu(&p, &theta, &eff, 0.1);
        let f2 = rate::eval_f2(&p, &theta, &mu, &eff, 0.1);
        let scale = f2.abs().max(1.0);

        let alpha = rate::update_alpha(&p, &theta, &mu, &eff, 0.1);
        let g1 = rate::eval_g1(&p, &alpha, &theta, &mu, &eff, 0.1);
        worst_tight = worst_tight.max((g1 - f2).abs() / scale);

        let beta = rate::update_beta(&p, &theta, &mu, &eff, 0.1);
        let g2 = rate::eval_g2(&theta, &beta, &p, &mu, &eff, 0.1);
        worst_tight = worst_tight.max((g2 - f2).abs() / scale);

        let alpha_probe = instances::random_real(instances::derive_seed(seed, 22), k, 1.0)
            .map(f64::abs);
        if rate::eval_g1(&p, &alpha_probe, &theta, &mu, &eff, 0.1) > f2 + 1e-9 * scale {
            dominance_violations += 1;
        }
        let beta_probe = instances::random_complex(instances::derive_seed(seed, 23), k, 1.0);
        if rate::eval_g2(&theta, &beta_probe, &p, &mu, &eff, 0.1) > f2 + 1e-9 * scale {
            dominance_violations += 1;
        }
    }
    CheckOutcome {
        name: "surrogate_tightness",
        pass: worst_tight <= 1e-12 && dominance_violations == 0,
        detail: format!(
            "max tightness err {worst_tight:.2e}, {dominance_violations} dominance violations / {samples} states"
        ),
    }
}

fn dual_certificates(samples: u64) -> CheckOutcome {
    let mut worst_gap: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    let mut failures = 0usize;
    for seed in 0..samples {
        let eff = instance(seed);
        let k = eff.num_users;
        let n = eff.num_elements;
        let p = instances::random_power(instances::derive_seed(seed, 30), k, 1e-3, 1.0);
        let theta = instances::random_feasible_theta(instances::derive_seed(seed, 31), n);
        let mu = rate::update_mu(&p, &theta, &eff, 0.1);
        let beta = rate::update_beta(&p, &theta, &mu, &eff, 0.1);
        let sub = qcqp::build_subproblem(&p, &mu, &beta, &eff, 0.1);
        let report = qcqp::solve_dual(&sub, 1e-7, None);
        let gap = report.dual_value - report.primal_value;
        let rel_gap = gap / report.dual_value.abs().max(1.0);
        worst_gap = worst_gap.max(rel_gap);
        worst_kkt = worst_kkt.max(report.kkt_residual);
        let feasible = report.theta.iter().all(|t| t.norm_sqr() <= 1.0 + 1e-8)
            && report.lambda.iter().all(|&l| l >= 0.0);
        if !(rel_gap <= 1e-5 && gap >= -1e-9 && report.kkt_residual <= 1e-6 && feasible) {
            failures += 1;
        }
    }
    CheckOutcome {
        name: "dual_certificates",
        pass: failures == 0,
        detail: format!(
            "{failures} failures / {samples} subproblems, worst gap {worst_gap:.2e}, worst KKT {worst_kkt:.2e}"
        ),
    }
}

fn determinism() -> CheckOutcome {
    let eff = instance(7);
    let options = SolverOptions {
        epsilon: 1e-6,
        max_iter: 40,
        seed: 7,
        ..Default::default()
    };
    let (_, a) = solve(&eff, 1.0, 0.1, &options);
    let (_, b) = solve(&eff, 1.0, 0.1, &options);
    let same = a.f1_values().len() == b.f1_values().len()
        && a.f1_values()
            .iter()
            .zip(b.f1_values())
            .all(|(x, y)| x.to_bits() == y.to_bits());
    CheckOutcome {
        name: "determinism",
        pass: same,
        detail: format!("{} iterations replayed bit-identically", a.iterations()),
    }
}

/// Run every check. `seeds` scales the sample counts (the binary uses 20;
/// tests may use less for speed).
pub fn run_validation(seeds: u64) -> Vec<CheckOutcome> {
    vec![
        monotone_traces(seeds.min(12)),
        reformulation_identity(5 * seeds),
        surrogate_tightness(5 * seeds),
        dual_certificates(seeds),
        determinism(),
    ]
}

pub fn render_report(outcomes: &[CheckOutcome]) -> String {
    let mut text = String::new();
    for outcome in outcomes {
        let _ = writeln!(text, "{}", outcome.line());
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    let _ = if failed == 0 {
        writeln!(text, "all {} checks passed", outcomes.len())
    } else {
        writeln!(text, "{failed} of {} checks FAILED", outcomes.len())
    };
    text
}
