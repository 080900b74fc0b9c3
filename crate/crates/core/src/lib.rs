//! Joint transmit-power control and passive beamforming for interference
//! networks served by distributed reflecting surfaces.
//!
//! `K` single-antenna source–destination pairs communicate only through `L`
//! passive reflecting surfaces (no direct links). Surface `l` carries `M_l`
//! phase-shift elements; all surfaces together expose `N = Σ_l M_l` reflection
//! coefficients collected in one vector `θ ∈ ℂ^N` with per-element constraint
//! `|θ_n| ≤ 1`. The library maximizes the sum of user rates over both the
//! transmit powers `p ∈ [0, P_max]^K` and `θ`:
//!
//! - [`channel`] — geometry, path loss, channel sampling, and reduction of the
//!   per-surface channels to effective cascaded vectors.
//! - [`rate`] — SINR / rate expressions and the fractional-programming
//!   surrogate objectives with their closed-form block updates.
//! - [`qcqp`] — the phase-shift subproblem: a quadratically constrained
//!   quadratic program solved through its Lagrange dual by the ellipsoid
//!   method.
//! - [`solver`] — the alternating outer loop tying the block updates together.
//! - [`baselines`] — power-only and phase-only reference schemes.
//! - [`oracle`] — brute-force and finite-difference checkers used by tests.
//! - [`instances`] — deterministic generators of random test problems.

pub mod baselines;
pub mod channel;
mod error;
pub mod instances;
pub mod oracle;
pub mod qcqp;
pub mod rate;
pub mod solver;

pub use error::{Error, Result};
