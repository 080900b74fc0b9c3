//! Reflection-vector subproblem: maximize the quadratic surrogate under
//! per-element magnitude constraints.
//!
//! For fixed powers, multipliers, and auxiliaries, the reflection-side
//! surrogate collapses to a concave quadratic in `θ`,
//!
//! ```text
//! maximize   q(θ) = Re{θᴴu} − θᴴAθ − c₀
//! subject to |θ_n|² ≤ 1,   n = 1..N
//! ```
//!
//! with `A ⪰ 0` Hermitian. Strong duality holds, and for multipliers
//! `λ ∈ ℝ₊^N` the inner maximizer of the Lagrangian
//! `L(θ, λ) = q(θ) − Σ_n λ_n (|θ_n|² − 1)` is the linear solve
//!
//! ```text
//! θ(λ) = ½ (diag(λ) + A)⁻¹ u.
//! ```
//!
//! The dual function `φ(λ) = L(θ(λ), λ)` is convex with subgradient
//! `s_n = 1 − |θ_n(λ)|²`, and is minimized here by the ellipsoid method
//! (central cuts, feasibility cuts for `λ_n ≥ 0`), dimension one falling
//! back to plain bisection. All linear solves are Cholesky factorizations;
//! near-singular systems fall back to a small Tikhonov shift.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{CMatrix, CVector, EffectiveChannels};

/// Data of one reflection subproblem: `q(θ) = Re{θᴴu} − θᴴAθ − constant`.
#[derive(Debug, Clone)]
pub struct ThetaSubproblem {
    /// Hermitian PSD quadratic coefficient.
    pub a: CMatrix,
    /// Linear coefficient.
    pub u: CVector,
    /// Constant offset subtracted from the objective; carrying it makes
    /// `objective` equal to the surrogate value, so duality gaps can be
    /// measured directly.
    pub constant: f64,
}

impl ThetaSubproblem {
    pub fn dim(&self) -> usize {
        self.u.len()
    }
}

/// Outcome of a dual solve.
#[derive(Debug, Clone)]
pub struct DualSolveReport {
    /// Feasible primal point (element magnitudes clamped to at most one).
    pub theta: CVector,
    /// Dual multipliers, elementwise nonnegative.
    pub lambda: DVector<f64>,
    /// Dual objective at `lambda` — an upper bound on the constrained optimum.
    pub dual_value: f64,
    /// Surrogate objective at `theta`.
    pub primal_value: f64,
    /// KKT residual of the (pre-clamp) pair; see [`kkt_residual`].
    pub kkt_residual: f64,
    /// Ellipsoid (or bisection) iterations performed.
    pub iterations: usize,
    /// Whether the unconstrained solution was already feasible.
    pub fast_path: bool,
    /// Whether the KKT tolerance was reached. When false the report still
    /// carries the best point seen before the iteration or volume budget
    /// ran out.
    pub converged: bool,
}

/// Assembles the subproblem from the current outer-loop state:
///
/// ```text
/// A  = Σ_k |β_k|² ( Σ_i p_i v_{i,k} v_{i,k}ᴴ + C_k )
/// u  = Σ_k √(2 p_k (1+μ_k)) · conj(β_k) · v_{k,k}
/// c₀ = σ_d² Σ_k |β_k|²
/// ```
pub fn build_subproblem(
    p: &DVector<f64>,
    mu: &DVector<f64>,
    beta: &CVector,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> ThetaSubproblem {
    let n = eff.num_elements;
    let k_count = eff.num_users;
    let mut a = CMatrix::zeros(n, n);
    let mut u = CVector::zeros(n);
    let mut c0 = 0.0;
    let one = Complex64::new(1.0, 0.0);
    for k in 0..k_count {
        let w = beta[k].norm_sqr();
        c0 += sigma_d2 * w;
        if w > 0.0 {
            for i in 0..k_count {
                let scale = w * p[i];
                if scale > 0.0 {
                    a.gerc(Complex64::new(scale, 0.0), &eff.v[i][k], &eff.v[i][k], one);
                }
            }
            eff.noise_cov[k].accumulate_scaled(w, &mut a);
        }
        let lin = beta[k].conj() * (2.0 * p[k] * (1.0 + mu[k])).sqrt();
        u.axpy(lin, &eff.v[k][k], one);
    }
    // Exact Hermitian symmetrization; rounding in the accumulation order
    // otherwise leaves ~1e-16 skew that Cholesky cares about.
    let at = a.adjoint();
    a += at;
    a *= Complex64::new(0.5, 0.0);
    ThetaSubproblem { a, u, constant: c0 }
}

/// Surrogate objective `Re{θᴴu} − θᴴAθ − c₀`.
pub fn objective(sub: &ThetaSubproblem, theta: &CVector) -> f64 {
    let lin = theta.dotc(&sub.u).re;
    let quad = theta.dotc(&(&sub.a * theta)).re;
    lin - quad - sub.constant
}

/// In-place lower Cholesky factorization of a Hermitian matrix. Returns the
/// (min, max) squared pivots on success; fails on a nonpositive pivot or on
/// a pivot-ratio condition estimate beyond ~1e12.
fn cholesky_in_place(m: &mut CMatrix) -> Result<(f64, f64), ()> {
    let n = m.nrows();
    let mut min_d = f64::INFINITY;
    let mut max_d = 0.0f64;
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= m[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(());
        }
        min_d = min_d.min(d);
        max_d = max_d.max(d);
        if min_d * 1e12 < max_d {
            return Err(());
        }
        let l = d.sqrt();
        m[(j, j)] = Complex64::new(l, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= m[(i, k)] * m[(j, k)].conj();
            }
            m[(i, j)] = s / l;
        }
    }
    Ok((min_d, max_d))
}

/// Solves `L Lᴴ x = b` in place given the lower factor.
fn cholesky_solve_in_place(l: &CMatrix, b: &mut CVector) {
    let n = l.nrows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)].re;
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)].conj() * b[k];
        }
        b[i] = s / l[(i, i)].re;
    }
}

/// Scratch buffers for repeated shifted solves.
struct ShiftedSolver {
    m: CMatrix,
    x: CVector,
}

impl ShiftedSolver {
    fn new(n: usize) -> Self {
        ShiftedSolver {
            m: CMatrix::zeros(n, n),
            x: CVector::zeros(n),
        }
    }

    /// Computes `θ = ½ (diag(λ) + A)⁻¹ u`, regularizing with a Tikhonov
    /// shift `δI` (escalated a few times) if the factorization fails or is
    /// too ill-conditioned. A singular system with `u = 0` yields zeros.
    fn solve(&mut self, sub: &ThetaSubproblem, lambda: &DVector<f64>) -> CVector {
        let n = sub.dim();
        let trace: f64 = (0..n).map(|i| sub.a[(i, i)].re).sum();
        let lambda_mean = lambda.sum() / n as f64;
        let base_shift = 1e-12 * (trace / n as f64 + lambda_mean + 1.0);
        let mut shift = 0.0;
        for attempt in 0..5 {
            self.m.copy_from(&sub.a);
            for i in 0..n {
                self.m[(i, i)] += Complex64::new(lambda[i] + shift, 0.0);
            }
            if cholesky_in_place(&mut self.m).is_ok() {
                self.x.copy_from(&sub.u);
                self.x *= Complex64::new(0.5, 0.0);
                cholesky_solve_in_place(&self.m, &mut self.x);
                if self.x.iter().all(|c| c.is_finite()) {
                    return self.x.clone();
                }
            }
            shift = base_shift * 100f64.powi(attempt);
        }
        CVector::zeros(n)
    }
}

/// Inner Lagrangian maximizer `θ(λ) = ½ (diag(λ) + A)⁻¹ u`.
pub fn theta_of_lambda(sub: &ThetaSubproblem, lambda: &DVector<f64>) -> CVector {
    ShiftedSolver::new(sub.dim()).solve(sub, lambda)
}

/// Dual objective `φ(λ) = maxθ L(θ, λ)`, evaluated directly from the
/// quadratic form at `θ(λ)` so it stays consistent with any regularization
/// the linear solve applied.
pub fn dual_value(sub: &ThetaSubproblem, lambda: &DVector<f64>) -> f64 {
    let theta = theta_of_lambda(sub, lambda);
    lagrangian(sub, &theta, lambda)
}

/// Lagrangian of the ball-constrained subproblem at `(θ, λ)`.
pub fn lagrangian(sub: &ThetaSubproblem, theta: &CVector, lambda: &DVector<f64>) -> f64 {
    let mut penalty = 0.0;
    for (t, &l) in theta.iter().zip(lambda.iter()) {
        penalty += l * (t.norm_sqr() - 1.0);
    }
    objective(sub, theta) - penalty
}

/// Worst violation across stationarity-free KKT conditions at `(θ, λ)`:
/// complementarity `|λ_n(|θ_n|²−1)|`, primal feasibility `|θ_n|²−1`, and
/// dual feasibility `−λ_n`, maxed over elements (never below zero).
pub fn kkt_residual(theta: &CVector, lambda: &DVector<f64>) -> f64 {
    assert_eq!(theta.len(), lambda.len(), "theta/lambda length");
    let mut worst = 0.0f64;
    for (t, &l) in theta.iter().zip(lambda.iter()) {
        let slack = t.norm_sqr() - 1.0;
        worst = worst.max((l * slack).abs()).max(slack).max(-l);
    }
    worst
}

fn clamp_feasible(theta: &mut CVector) {
    for t in theta.iter_mut() {
        let r = t.norm();
        if r > 1.0 {
            *t /= Complex64::new(r, 0.0);
        }
    }
}

/// Iteration budget with the standard ellipsoid complexity shape; the floor
/// keeps it meaningful when the initial radius is itself tiny.
fn default_budget(n: usize, radius: f64) -> usize {
    let n2 = (n * n) as f64;
    let span = (radius / 1e-8).ln().max(10.0);
    (4.0 * n2 * span).ceil() as usize
}

/// Minimizes the dual of the reflection subproblem.
///
/// Fast path: if `θ(0)` is already feasible the constraints are inactive
/// and `λ = 0` is optimal. Otherwise the ellipsoid method runs over
/// `λ ≥ 0`, starting from the ball centered at `‖u‖·1` with radius
/// `2‖u‖√N`, cutting on negative coordinates (feasibility) or on the dual
/// subgradient (objective), until the KKT residual drops below `tol_kkt`,
/// the ellipsoid volume collapses, or the iteration budget (defaulting to
/// the standard `O(N² log(R/ε))` bound) is spent. Dimension one bisects
/// instead. Never panics on valid input; if the tolerance is not reached
/// the best candidate seen is returned with `converged = false`.
pub fn solve_dual(sub: &ThetaSubproblem, tol_kkt: f64, max_iter: Option<usize>) -> DualSolveReport {
    let n = sub.dim();
    let mut solver = ShiftedSolver::new(n);
    let zero_lambda = DVector::zeros(n);
    let theta0 = solver.solve(sub, &zero_lambda);
    if theta0.iter().all(|t| t.norm_sqr() <= 1.0 + 1e-12) {
        let res = kkt_residual(&theta0, &zero_lambda);
        let dual = lagrangian(sub, &theta0, &zero_lambda);
        let mut theta = theta0;
        clamp_feasible(&mut theta);
        let primal = objective(sub, &theta);
        return DualSolveReport {
            theta,
            lambda: zero_lambda,
            dual_value: dual,
            primal_value: primal,
            kkt_residual: res,
            iterations: 0,
            fast_path: true,
            converged: res <= tol_kkt,
        };
    }

    let radius = 2.0 * sub.u.norm() * (n as f64).sqrt();
    let budget = max_iter.unwrap_or_else(|| default_budget(n, radius));
    let mut best: Option<(DVector<f64>, CVector, f64)> = None;
    let mut iterations = 0;

    if n == 1 {
        // |θ(λ)| decreases monotonically in λ; bisect on feasibility.
        let mut lo = 0.0f64;
        let mut hi = sub.u.norm().max(1.0);
        loop {
            let t = solver.solve(sub, &DVector::from_element(1, hi));
            if t[0].norm_sqr() <= 1.0 {
                consider(&mut best, DVector::from_element(1, hi), t);
                break;
            }
            hi *= 2.0;
            iterations += 1;
            if iterations >= budget {
                break;
            }
        }
        while iterations < budget {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            let lam = DVector::from_element(1, mid);
            let theta = solver.solve(sub, &lam);
            let infeasible = theta[0].norm_sqr() > 1.0;
            let res = consider(&mut best, lam, theta);
            if res <= tol_kkt {
                break;
            }
            if infeasible {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::MIN_POSITIVE * 4.0 {
                break;
            }
        }
    } else {
        let nf = n as f64;
        let mut center = DVector::from_element(n, sub.u.norm());
        // The shape matrix is kept in factored form P = BBᵀ so it stays
        // positive semidefinite under rounding — the plain rank-one downdate
        // of P loses definiteness after a few dozen cuts and stalls the
        // method far from the optimum.
        let mut b = DMatrix::<f64>::identity(n, n) * radius;
        // Central cut in factored form: with w = Bᵀg and γ = ‖w‖,
        //   c ← c − Bw/((n+1)γ),  B ← √κ·(B − η·(Bw)wᵀ/γ²),
        // where κ = n²/(n²−1) and η = 1 − √((n−1)/(n+1)) reproduce the
        // textbook update P ← κ(P − 2(Pg)(Pg)ᵀ/((n+1)γ²)).
        let eta = 1.0 - ((nf - 1.0) / (nf + 1.0)).sqrt();
        let kappa_half = (nf * nf / (nf * nf - 1.0)).sqrt();
        let floor_semiaxis = (tol_kkt * radius * 1e-2).max(1e-280);
        let mut cut = DVector::zeros(n);

        while iterations < budget {
            iterations += 1;
            // Feasibility cut on the most negative coordinate, otherwise an
            // objective cut along the dual subgradient 1 − |θ(λ)|².
            let mut neg_idx = None;
            let mut neg_val = 0.0;
            for i in 0..n {
                if center[i] < neg_val {
                    neg_val = center[i];
                    neg_idx = Some(i);
                }
            }
            match neg_idx {
                Some(i) => {
                    cut.fill(0.0);
                    cut[i] = -1.0;
                }
                None => {
                    let theta = solver.solve(sub, &center);
                    for i in 0..n {
                        cut[i] = 1.0 - theta[i].norm_sqr();
                    }
                    let res = consider(&mut best, center.clone(), theta);
                    if res <= tol_kkt {
                        break;
                    }
                }
            }
            let w = b.tr_mul(&cut);
            let gamma = w.norm();
            if !gamma.is_finite() || gamma == 0.0 {
                break;
            }
            let bw = &b * &w;
            center.axpy(-1.0 / ((nf + 1.0) * gamma), &bw, 1.0);
            let scale = eta / (gamma * gamma);
            for r in 0..n {
                for c in 0..n {
                    b[(r, c)] = kappa_half * (b[(r, c)] - scale * bw[r] * w[c]);
                }
            }
            // ‖B‖_F bounds the longest semiaxis, so dropping below the floor
            // means every direction of the multiplier is resolved.
            if b.norm() <= floor_semiaxis {
                break;
            }
        }

        // A floor or budget exit leaves the final center unevaluated.
        if center.iter().all(|&x| x >= 0.0) {
            let theta = solver.solve(sub, &center);
            consider(&mut best, center.clone(), theta);
        }
    }

    // Inactive multipliers approach the λ_n = 0 boundary only geometrically,
    // leaving a complementarity residue λ_n(1 − |θ_n|²). Snapping small
    // coordinates to exact zero removes it whenever the guess is right; the
    // candidate is kept only if its residual is genuinely lower.
    if let Some((lam0, _, _)) = best.clone() {
        let lmax = lam0.amax();
        if lmax > 0.0 {
            for frac in [1e-12, 1e-9, 1e-6, 1e-4, 1e-3] {
                let tau = frac * lmax;
                let cand = lam0.map(|x| if x <= tau { 0.0 } else { x });
                if cand == lam0 {
                    continue;
                }
                let theta = solver.solve(sub, &cand);
                consider(&mut best, cand, theta);
            }
        }
    }

    // The loop may exit before ever evaluating a feasible center.
    if best.is_none() {
        let lam = DVector::from_element(n, sub.u.norm());
        let theta = solver.solve(sub, &lam);
        consider(&mut best, lam, theta);
    }
    let (lambda, theta_raw, res) = best.unwrap();
    let dual = lagrangian(sub, &theta_raw, &lambda);
    let mut theta = theta_raw;
    clamp_feasible(&mut theta);
    let primal = objective(sub, &theta);
    debug_assert!(
        dual >= primal - 1e-5 * dual.abs().max(1.0),
        "weak duality violated: dual {dual} < primal {primal}"
    );
    DualSolveReport {
        theta,
        lambda,
        dual_value: dual,
        primal_value: primal,
        kkt_residual: res,
        iterations,
        fast_path: false,
        converged: res <= tol_kkt,
    }
}

/// Tracks the candidate with the lowest KKT residual; returns this
/// candidate's residual.
fn consider(
    best: &mut Option<(DVector<f64>, CVector, f64)>,
    lambda: DVector<f64>,
    theta: CVector,
) -> f64 {
    let res = kkt_residual(&theta, &lambda);
    let better = match best {
        Some((_, _, b)) => res < *b,
        None => true,
    };
    if better {
        *best = Some((lambda, theta, res));
    }
    res
}

/// Convenience: assemble and solve the reflection subproblem for the
/// current outer state, returning the full report.
pub fn solve_theta(
    p: &DVector<f64>,
    mu: &DVector<f64>,
    beta: &CVector,
    eff: &EffectiveChannels,
    sigma_d2: f64,
    tol_kkt: f64,
    max_iter: Option<usize>,
) -> (ThetaSubproblem, DualSolveReport) {
    let sub = build_subproblem(p, mu, beta, eff, sigma_d2);
    let report = solve_dual(&sub, tol_kkt, max_iter);
    (sub, report)
}

/// The subproblem's `q` reproduces the surrogate: sanity hook used by tests.
#[doc(hidden)]
pub fn surrogate_gap(
    sub: &ThetaSubproblem,
    theta: &CVector,
    beta: &CVector,
    p: &DVector<f64>,
    mu: &DVector<f64>,
    eff: &EffectiveChannels,
    sigma_d2: f64,
) -> f64 {
    let direct = crate::rate::eval_g2(theta, beta, p, mu, eff, sigma_d2);
    (objective(sub, theta) - direct).abs()
}
