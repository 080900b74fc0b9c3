//! Alternating outer loop: closed-form block updates for the multipliers,
//! auxiliaries, and powers, and a dual ellipsoid solve for the reflection
//! vector, repeated until the reformulated objective stalls.
//!
//! Each iteration updates, in order: `μ` (optimal multipliers), `α` and `p`
//! (power side), `β` and `θ` (reflection side). Every step maximizes a
//! surrogate that is tight at the previous iterate, so the objective `f₁`
//! never decreases; the reflection step additionally keeps the previous
//! vector whenever the (numerically approximate) dual solve fails to
//! improve the surrogate, which preserves monotonicity even when the
//! ellipsoid method returns a slightly suboptimal point.

use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{CVector, EffectiveChannels};
use crate::qcqp;
use crate::rate;

/// Outer-loop controls.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Stop once the objective improves by no more than this (absolute).
    pub epsilon: f64,
    /// Hard cap on outer iterations.
    pub max_iter: usize,
    /// Seed for the random-phase initialization of the reflection vector.
    pub seed: u64,
    /// KKT tolerance handed to the reflection dual solve.
    pub theta_tol_kkt: f64,
    /// Optional iteration cap for each reflection dual solve; `None` uses
    /// the ellipsoid method's own complexity-bound budget.
    pub theta_max_iter: Option<usize>,
    /// Warm-start reflection vector; `None` draws seeded random phases.
    /// Not part of the config-file surface.
    #[serde(skip)]
    pub theta_init: Option<CVector>,
    /// Warm-start power vector; `None` starts at full power.
    /// Not part of the config-file surface.
    #[serde(skip)]
    pub p_init: Option<DVector<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            epsilon: 1e-4,
            max_iter: 500,
            seed: 0,
            theta_tol_kkt: 1e-6,
            theta_max_iter: None,
            theta_init: None,
            p_init: None,
        }
    }
}

/// Full optimizer state after a run.
#[derive(Debug, Clone)]
pub struct BeamformingState {
    pub p: DVector<f64>,
    pub theta: CVector,
    pub mu: DVector<f64>,
    pub alpha: DVector<f64>,
    pub beta: CVector,
    /// Multipliers of the last accepted reflection dual solve.
    pub lambda: DVector<f64>,
}

/// One outer iteration's snapshot. Record 0 is the initial point.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iter: usize,
    /// Reformulated objective after the iteration's updates.
    pub f1: f64,
    /// True sum rate at the iterate.
    pub sum_rate: f64,
    pub p: Vec<f64>,
    /// `max(0, max_n |θ_n|² − 1)`.
    pub theta_infeasibility: f64,
    /// KKT residual reported by the iteration's reflection dual solve
    /// (zero when the reflection block did not run).
    pub kkt_residual: f64,
    /// Wall-clock time of this iteration.
    pub wall: std::time::Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The objective improvement dropped to `epsilon` or below.
    EpsilonReached,
    /// The iteration cap was hit first.
    MaxIterations,
}

/// Per-iteration history of one run.
#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    pub records: Vec<IterationRecord>,
    pub reason: StopReason,
    /// Fraction of reflection dual solves that took the unconstrained fast
    /// path (zero if the reflection block never ran).
    pub fast_path_fraction: f64,
}

impl ConvergenceTrace {
    /// Objective values in iteration order.
    pub fn f1_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f1).collect()
    }

    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_f1(&self) -> f64 {
        self.records.last().map(|r| r.f1).unwrap_or(f64::NAN)
    }

    pub fn final_sum_rate(&self) -> f64 {
        self.records.last().map(|r| r.sum_rate).unwrap_or(f64::NAN)
    }
}

/// Which blocks an outer iteration updates. The reference schemes freeze
/// one side; the joint scheme runs both.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Blocks {
    pub power: bool,
    pub theta: bool,
}

/// Unit-modulus reflection vector with seeded uniform phases — the common
/// initial (and, for the power-only scheme, permanent) choice.
pub fn random_phase_init(n: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVector::from_fn(n, |_, _| {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * rng.random::<f64>())
    })
}

fn infeasibility(theta: &CVector) -> f64 {
    theta
        .iter()
        .map(|t| t.norm_sqr() - 1.0)
        .fold(0.0f64, f64::max)
}

/// Joint power/reflection optimization. Returns the final state and the
/// per-iteration trace; never fails — hitting the iteration cap is reported
/// through [`StopReason::MaxIterations`].
pub fn solve(
    eff: &EffectiveChannels,
    p_max: f64,
    sigma_d2: f64,
    options: &SolverOptions,
) -> (BeamformingState, ConvergenceTrace) {
    run_blocks(eff, p_max, sigma_d2, options, Blocks { power: true, theta: true })
}

pub(crate) fn run_blocks(
    eff: &EffectiveChannels,
    p_max: f64,
    sigma_d2: f64,
    options: &SolverOptions,
    blocks: Blocks,
) -> (BeamformingState, ConvergenceTrace) {
    let k = eff.num_users;
    let n = eff.num_elements;
    assert!(p_max > 0.0, "power budget must be positive");
    assert!(sigma_d2 > 0.0, "destination noise must be positive");

    let mut p = match &options.p_init {
        Some(p0) => {
            assert_eq!(p0.len(), k, "p_init length");
            assert!(p0.iter().all(|&x| (0.0..=p_max).contains(&x)), "p_init outside budget");
            p0.clone()
        }
        None => DVector::from_element(k, p_max),
    };
    let mut theta = match &options.theta_init {
        Some(t0) => {
            assert_eq!(t0.len(), n, "theta_init length");
            assert!(t0.iter().all(|t| t.norm_sqr() <= 1.0 + 1e-8), "theta_init infeasible");
            t0.clone()
        }
        None => random_phase_init(n, options.seed),
    };
    let mut mu = rate::update_mu(&p, &theta, eff, sigma_d2);
    let mut alpha = DVector::zeros(k);
    let mut beta = CVector::zeros(k);
    let mut lambda = DVector::zeros(n);

    let mut records = Vec::with_capacity(options.max_iter.min(64) + 1);
    let start = Instant::now();
    let f1_init = rate::eval_f1(&p, &theta, &mu, eff, sigma_d2);
    records.push(IterationRecord {
        iter: 0,
        f1: f1_init,
        sum_rate: rate::sum_rate(&p, &theta, eff, sigma_d2),
        p: p.iter().copied().collect(),
        theta_infeasibility: infeasibility(&theta),
        kkt_residual: 0.0,
        wall: start.elapsed(),
    });

    let mut f1_prev = f1_init;
    let mut reason = StopReason::MaxIterations;
    let mut theta_solves = 0usize;
    let mut fast_paths = 0usize;

    for iter in 1..=options.max_iter {
        let tick = Instant::now();
        mu = rate::update_mu(&p, &theta, eff, sigma_d2);

        if blocks.power {
            alpha = rate::update_alpha(&p, &theta, &mu, eff, sigma_d2);
            p = rate::update_power(&alpha, &theta, &mu, eff, p_max);
        }

        let mut iter_kkt = 0.0;
        if blocks.theta {
            beta = rate::update_beta(&p, &theta, &mu, eff, sigma_d2);
            let sub = qcqp::build_subproblem(&p, &mu, &beta, eff, sigma_d2);
            // A vanishing linear term makes every feasible point a maximizer;
            // keep the current vector rather than jumping to zero.
            if sub.u.norm() > 0.0 {
                let report =
                    qcqp::solve_dual(&sub, options.theta_tol_kkt, options.theta_max_iter);
                theta_solves += 1;
                if report.fast_path {
                    fast_paths += 1;
                }
                iter_kkt = report.kkt_residual;
                // The dual solve is approximate; accept its point only if it
                // actually improves the tight surrogate.
                let f2_old = rate::eval_f2(&p, &theta, &mu, eff, sigma_d2);
                let f2_new = rate::eval_f2(&p, &report.theta, &mu, eff, sigma_d2);
                if f2_new >= f2_old {
                    theta = report.theta;
                    lambda = report.lambda;
                }
            }
        }

        let f1 = rate::eval_f1(&p, &theta, &mu, eff, sigma_d2);
        debug_assert!(
            f1 >= f1_prev - 1e-9 * f1_prev.abs(),
            "objective decreased: {f1_prev} -> {f1} at iteration {iter}"
        );
        records.push(IterationRecord {
            iter,
            f1,
            sum_rate: rate::sum_rate(&p, &theta, eff, sigma_d2),
            p: p.iter().copied().collect(),
            theta_infeasibility: infeasibility(&theta),
            kkt_residual: iter_kkt,
            wall: tick.elapsed(),
        });
        let improved = f1 - f1_prev;
        f1_prev = f1;
        if improved <= options.epsilon {
            reason = StopReason::EpsilonReached;
            break;
        }
    }

    let state = BeamformingState { p, theta, mu, alpha, beta, lambda };
    let trace = ConvergenceTrace {
        records,
        reason,
        fast_path_fraction: if theta_solves > 0 {
            fast_paths as f64 / theta_solves as f64
        } else {
            0.0
        },
    };
    (state, trace)
}

/// Best-of-several joint optimization for small networks.
///
/// The alternating loop is monotone but only locally optimal, and on small
/// networks its fixed point depends visibly on the starting point — above
/// all on which users start active: a power that reaches zero never comes
/// back (the user's auxiliaries vanish with it), and from full power the
/// loop often keeps every user transmitting even when the best operating
/// point serves a single one. This runs [`solve`] from full power and from
/// each single-user activation, crossing every power start with
/// `theta_seeds` independent random reflection draws, and returns the run
/// whose final sum rate is highest. Any `p_init`/`theta_init` in `options`
/// are replaced by the start family; runtime is `(K+1)·theta_seeds` plain
/// solves.
pub fn solve_multi_start(
    eff: &EffectiveChannels,
    p_max: f64,
    sigma_d2: f64,
    options: &SolverOptions,
    theta_seeds: u64,
) -> (BeamformingState, ConvergenceTrace) {
    assert!(theta_seeds >= 1, "at least one reflection draw per start");
    let k = eff.num_users;
    let mut starts = vec![DVector::from_element(k, p_max)];
    for user in 0..k {
        let mut p0 = DVector::zeros(k);
        p0[user] = p_max;
        starts.push(p0);
    }
    let mut best: Option<(BeamformingState, ConvergenceTrace)> = None;
    for (s, p0) in starts.iter().enumerate() {
        for r in 0..theta_seeds {
            let run_options = SolverOptions {
                seed: crate::instances::derive_seed(
                    crate::instances::derive_seed(options.seed, s as u64),
                    r,
                ),
                p_init: Some(p0.clone()),
                theta_init: None,
                ..options.clone()
            };
            let (state, trace) = solve(eff, p_max, sigma_d2, &run_options);
            if best.as_ref().is_none_or(|(_, t)| trace.final_sum_rate() > t.final_sum_rate()) {
                best = Some((state, trace));
            }
        }
    }
    best.expect("at least one start runs")
}
