//! Independent verification tools: exhaustive grid searches and numeric
//! derivative checks.
//!
//! Nothing here reuses solver or subproblem code — values come straight
//! from the rate expressions — so agreement between an optimizer output and
//! an oracle is evidence, not circularity. Grid searches refuse to run when
//! the grid would exceed ten million points.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::{CVector, EffectiveChannels};
use crate::rate::sum_rate;
use crate::{Error, Result};

const MAX_GRID: f64 = 1e7;

/// Exhaustive search over quantized unit-modulus reflection vectors
/// `θ_n ∈ {e^(2πi q / levels)}`, powers held fixed. Returns the best vector
/// and its sum rate.
pub fn brute_force_theta(
    eff: &EffectiveChannels,
    p: &DVector<f64>,
    sigma_d2: f64,
    levels: usize,
) -> Result<(CVector, f64)> {
    if levels < 2 {
        return Err(Error::Invalid("phase levels (need at least 2)".into()));
    }
    let n = eff.num_elements;
    if (levels as f64).powi(n as i32) > MAX_GRID {
        return Err(Error::TooLarge(format!(
            "{levels}^{n} reflection grid points"
        )));
    }
    let phases: Vec<Complex64> = (0..levels)
        .map(|q| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * q as f64 / levels as f64))
        .collect();
    let mut digits = vec![0usize; n];
    let mut theta = CVector::from_element(n, phases[0]);
    let mut best_theta = theta.clone();
    let mut best = sum_rate(p, &theta, eff, sigma_d2);
    // Odometer enumeration over all levels^N combinations.
    loop {
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok((best_theta, best));
            }
            digits[pos] += 1;
            if digits[pos] < levels {
                theta[pos] = phases[digits[pos]];
                break;
            }
            digits[pos] = 0;
            theta[pos] = phases[0];
            pos += 1;
        }
        let value = sum_rate(p, &theta, eff, sigma_d2);
        if value > best {
            best = value;
            best_theta = theta.clone();
        }
    }
}

/// Exhaustive search over the uniform power grid
/// `p_k ∈ {0, P/(levels−1), …, P}` with the reflection vector held fixed.
pub fn brute_force_power(
    eff: &EffectiveChannels,
    theta: &CVector,
    sigma_d2: f64,
    p_max: f64,
    levels: usize,
) -> Result<(DVector<f64>, f64)> {
    if levels < 2 {
        return Err(Error::Invalid("power levels (need at least 2)".into()));
    }
    let k = eff.num_users;
    if (levels as f64).powi(k as i32) > MAX_GRID {
        return Err(Error::TooLarge(format!("{levels}^{k} power grid points")));
    }
    let steps: Vec<f64> = (0..levels)
        .map(|j| p_max * j as f64 / (levels - 1) as f64)
        .collect();
    let mut digits = vec![0usize; k];
    let mut p = DVector::from_element(k, steps[0]);
    let mut best_p = p.clone();
    let mut best = sum_rate(&p, theta, eff, sigma_d2);
    loop {
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok((best_p, best));
            }
            digits[pos] += 1;
            if digits[pos] < levels {
                p[pos] = steps[digits[pos]];
                break;
            }
            digits[pos] = 0;
            p[pos] = steps[0];
            pos += 1;
        }
        let value = sum_rate(&p, theta, eff, sigma_d2);
        if value > best {
            best = value;
            best_p = p.clone();
        }
    }
}

/// Central-difference directional derivative of `f` at `x` along `dir`,
/// reported relative to the local function scale. A claimed maximizer
/// should produce values far below any plausible tolerance; a wrong
/// closed-form update shows up orders of magnitude higher.
pub fn finite_diff_check<F>(f: F, x: &[f64], dir: &[f64], step: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x.len(), dir.len(), "point/direction length");
    assert!(step > 0.0, "step must be positive");
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    for i in 0..x.len() {
        plus[i] += step * dir[i];
        minus[i] -= step * dir[i];
    }
    let fp = f(&plus);
    let fm = f(&minus);
    let f0 = f(x);
    let derivative = (fp - fm) / (2.0 * step);
    if derivative == 0.0 {
        return 0.0;
    }
    let scale = f0.abs().max(fp.abs()).max(fm.abs()).max(f64::MIN_POSITIVE);
    derivative.abs() / scale
}

/// Result of a monotonicity audit over an objective trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub pass: bool,
    /// Largest decrease between consecutive values (0 when none).
    pub worst_drop: f64,
    /// Index of the worst decrease, if any.
    pub at: Option<usize>,
}

/// Checks that `values` never decreases by more than `rel_slack` relative
/// to the previous value.
pub fn check_monotone(values: &[f64], rel_slack: f64) -> MonotoneReport {
    let mut worst_drop = 0.0f64;
    let mut at = None;
    let mut pass = true;
    for t in 1..values.len() {
        let drop = values[t - 1] - values[t];
        if drop > worst_drop {
            worst_drop = drop;
            at = Some(t);
        }
        if values[t] < values[t - 1] - rel_slack * values[t - 1].abs() {
            pass = false;
        }
    }
    MonotoneReport { pass, worst_drop, at }
}
