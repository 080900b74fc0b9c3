//! Rates and the fractional-programming surrogates used to maximize them.
//!
//! With effective cascaded channels `v[i][k]`, reflection vector `θ`, and
//! powers `p`, destination k decodes at SINR
//!
//! ```text
//!                     p_k |θᴴv_{k,k}|²
//! γ_k = ─────────────────────────────────────────────
//!        Σ_{i≠k} p_i |θᴴv_{i,k}|² + θᴴC_kθ + σ_d²
//! ```
//!
//! and the two-phase reflection protocol halves the spectral efficiency, so
//! `R_k = ½ log₂(1 + γ_k)`. Sum-rate maximization is handled through a
//! Lagrangian-dual reformulation of the log terms: with multipliers `μ ≥ 0`,
//!
//! ```text
//! f₁(p, θ, μ) = Σ_k ½log₂(1+μ_k) + (f₂(p, θ, μ) − Σ_k μ_k/2) / ln 2
//! f₂(p, θ, μ) = Σ_k (1+μ_k) p_k |θᴴv_{k,k}|² / (2 B_k)
//! B_k(p, θ)   = Σ_i p_i |θᴴv_{i,k}|² + θᴴC_kθ + σ_d²     (sum over ALL i)
//! ```
//!
//! The `1/ln 2` on the linear terms matches their scale to the base-2 log;
//! only then does `∂f₁/∂μ_k = 0` land exactly on `μ_k* = γ_k`. Holding
//! (p, θ) fixed, `f₁` is concave in `μ` and maximized at `μ* = γ`, where it
//! equals the sum rate exactly (both correction terms cancel). The ratio term `f₂` is then handled by quadratic
//! transforms: a real auxiliary `α` decouples the power subproblem,
//!
//! ```text
//! g₁(p, α) = Σ_k [ α_k √(2(1+μ_k) p_k |θᴴv_{k,k}|²) − α_k² B_k ]
//! ```
//!
//! concave and separable in `p`, maximized over the box `[0, P_max]` in
//! closed form; a complex auxiliary `β` does the same for the reflection
//! subproblem,
//!
//! ```text
//! g₂(θ, β) = Σ_k [ √(2 p_k (1+μ_k)) · Re(β̄_k θᴴv_{k,k}) − |β_k|² B_k ].
//! ```
//!
//! Both transforms are tight at their optimal auxiliaries (`g = f₂`) and
//! never exceed `f₂`, which is what makes the alternating updates in
//! [`crate::solver`] monotone.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{CVector, EffectiveChannels};
use crate::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// `½ log₂(1 + x)` evaluated without precision loss for small `x`.
#[inline]
fn half_log2_1p(x: f64) -> f64 {
    0.5 * x.ln_1p() / LN_2
}

/// End-to-end complex gains `q[(i, k)] = θᴴ v[i][k]` for all pairs.
pub fn link_gains(eff: &EffectiveChannels, theta: &CVector) -> DMatrix<Complex64> {
    let k = eff.num_users;
    DMatrix::from_fn(k, k, |i, j| eff.gain(i, j, theta))
}

/// Total received power at each destination, signal included:
/// `B_k = Σ_i p_i|q_{i,k}|² + θᴴC_kθ + σ_d²`.
fn denominators(
    p: &DVector<f64>,
    theta: &CVector,
    q: &DMatrix<Complex64>,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> DVector<f64> {
    let k_count = eff.num_users;
    DVector::from_fn(k_count, |k, _| {
        let mut acc = eff.noise_power(k, theta) + sigma_d2;
        for i in 0..k_count {
            acc += p[i] * q[(i, k)].norm_sqr();
        }
        acc
    })
}

/// Per-destination SINR under powers `p` and reflection vector `theta`.
pub fn sinr(
    p: &DVector<f64>,
    theta: &CVector,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> DVector<f64> {
    let k_count = eff.num_users;
    assert_eq!(p.len(), k_count, "power vector length");
    let q = link_gains(eff, theta);
    DVector::from_fn(k_count, |k, _| {
        let mut interference = eff.noise_power(k, theta) + sigma_d2;
        for i in 0..k_count {
            if i != k {
                interference += p[i] * q[(i, k)].norm_sqr();
            }
        }
        p[k] * q[(k, k)].norm_sqr() / interference
    })
}

/// Per-user and sum rates for given SINRs.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub per_user: DVector<f64>,
    pub sum: f64,
}

/// `R_k = ½ log₂(1 + γ_k)`. Errors on negative SINR.
pub fn rates(sinr: &DVector<f64>) -> Result<RateReport> {
    for (k, &s) in sinr.iter().enumerate() {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("sinr[{k}] = {s}")));
        }
    }
    let per_user = sinr.map(half_log2_1p);
    let sum = per_user.sum();
    Ok(RateReport { per_user, sum })
}

/// Sum rate reached by `(p, theta)`.
pub fn sum_rate(p: &DVector<f64>, theta: &CVector, eff: &EffectiveChannels, sigma_d2: f64) -> f64 {
    sinr(p, theta, eff, sigma_d2).map(half_log2_1p).sum()
}

/// Optimal dual multipliers for fixed `(p, theta)`: `μ_k* = γ_k`.
pub fn update_mu(
    p: &DVector<f64>,
    theta: &CVector,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> DVector<f64> {
    sinr(p, theta, eff, sigma_d2)
}

/// Dual-reformulated objective `f₁`; equals the sum rate at `μ = μ*`.
pub fn eval_f1(
    p: &DVector<f64>,
    theta: &CVector,
    mu: &DVector<f64>,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> f64 {
    let logs: f64 = mu.iter().map(|&m| half_log2_1p(m)).sum();
    let linear: f64 = 0.5 * mu.sum();
    logs + (eval_f2(p, theta, mu, eff, sigma_d2) - linear) / LN_2
}

/// Ratio term of the reformulation (signal power over total received power).
pub fn eval_f2(
    p: &DVector<f64>,
    theta: &CVector,
    mu: &DVector<f64>,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> f64 {
    let q = link_gains(eff, theta);
    let b = denominators(p, theta, &q, eff, sigma_d2);
    (0..eff.num_users)
        .map(|k| (1.0 + mu[k]) * p[k] * q[(k, k)].norm_sqr() / (2.0 * b[k]))
        .sum()
}

/// Optimal real auxiliaries of the power-side transform:
/// `α_k* = √(2(1+μ_k) p_k |θᴴv_{k,k}|²) / (2 B_k)`.
pub fn update_alpha(
    p: &DVector<f64>,
    theta: &CVector,
    mu: &DVector<f64>,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> DVector<f64> {
    let q = link_gains(eff, theta);
    let b = denominators(p, theta, &q, eff, sigma_d2);
    DVector::from_fn(eff.num_users, |k, _| {
        (2.0 * (1.0 + mu[k]) * p[k] * q[(k, k)].norm_sqr()).sqrt() / (2.0 * b[k])
    })
}

/// Power-side surrogate `g₁(p, α)`; tight at `α = α*`, never above `f₂`.
pub fn eval_g1(
    p: &DVector<f64>,
    alpha: &DVector<f64>,
    theta: &CVector,
    mu: &DVector<f64>,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> f64 {
    let q = link_gains(eff, theta);
    let b = denominators(p, theta, &q, eff, sigma_d2);
    (0..eff.num_users)
        .map(|k| {
            alpha[k] * (2.0 * (1.0 + mu[k]) * p[k] * q[(k, k)].norm_sqr()).sqrt()
                - alpha[k] * alpha[k] * b[k]
        })
        .sum()
}

/// Box-constrained maximizer of `g₁` over `p` for fixed auxiliaries:
///
/// ```text
/// p_k* = min{ P_max, α_k²(1+μ_k)|θᴴv_{k,k}|² / (2 w_k²) },
/// w_k  = Σ_i α_i² |θᴴv_{k,i}|²
/// ```
///
/// `w_k` collects the interference source k inflicts across destinations.
/// A vanishing `w_k` means `g₁` does not decrease in `p_k` at all, so the
/// budget cap is optimal.
pub fn update_power(
    alpha: &DVector<f64>,
    theta: &CVector,
    mu: &DVector<f64>,
    eff: &EffectiveChannels,
    p_max: f64,
) -> DVector<f64> {
    let q = link_gains(eff, theta);
    let k_count = eff.num_users;
    DVector::from_fn(k_count, |k, _| {
        let w: f64 = (0..k_count)
            .map(|i| alpha[i] * alpha[i] * q[(k, i)].norm_sqr())
            .sum();
        if w == 0.0 {
            return p_max;
        }
        let unconstrained =
            alpha[k] * alpha[k] * (1.0 + mu[k]) * q[(k, k)].norm_sqr() / (2.0 * w * w);
        unconstrained.min(p_max)
    })
}

/// Optimal complex auxiliaries of the reflection-side transform:
/// `β_k* = √(2 p_k (1+μ_k)) · θᴴv_{k,k} / (2 B_k)`.
pub fn update_beta(
    p: &DVector<f64>,
    theta: &CVector,
    mu: &DVector<f64>,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> CVector {
    let q = link_gains(eff, theta);
    let b = denominators(p, theta, &q, eff, sigma_d2);
    CVector::from_fn(eff.num_users, |k, _| {
        q[(k, k)] * ((2.0 * p[k] * (1.0 + mu[k])).sqrt() / (2.0 * b[k]))
    })
}

/// Reflection-side surrogate `g₂(θ, β)`; tight at `β = β*`, never above `f₂`.
pub fn eval_g2(
    theta: &CVector,
    beta: &CVector,
    p: &DVector<f64>,
    mu: &DVector<f64>,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> f64 {
    let q = link_gains(eff, theta);
    let b = denominators(p, theta, &q, eff, sigma_d2);
    (0..eff.num_users)
        .map(|k| {
            (2.0 * p[k] * (1.0 + mu[k])).sqrt() * (beta[k].conj() * q[(k, k)]).re
                - beta[k].norm_sqr() * b[k]
        })
        .sum()
}
