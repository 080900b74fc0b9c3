//! Deterministic generators of random test problems.
//!
//! Everything here is seeded; the same seed always yields the same problem.
//! Synthetic scenarios flatten the distance law (`ρ = 0`, `T0 = 0 dB`) so
//! channel entries are unit-variance and the optimization landscape has
//! O(1) scale, which keeps tolerance checks meaningful. Physical scenarios
//! go through [`Scenario::default`] instead.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    assemble_effective, sample_channels, sample_layout, CVector, Disk, EffectiveChannels,
    NoiseMode, Scenario,
};
use crate::Result;

/// Cheap deterministic seed mixing (splitmix64 finalizer), used to derive
/// independent sub-streams from one base seed.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scenario with unit-variance fading on every link: `T0 = 0 dB`, `ρ = 0`,
/// so geometry does not attenuate anything.
pub fn synthetic_scenario(
    pairs: usize,
    surfaces: usize,
    elements_each: usize,
    p_max: f64,
    sigma_r2: f64,
    sigma_d2: f64,
) -> Scenario {
    Scenario {
        num_pairs: pairs,
        elements_per_surface: vec![elements_each; surfaces],
        source_region: Disk { center: [0.0, 0.0], radius: 10.0 },
        dest_region: Disk { center: [100.0, 0.0], radius: 10.0 },
        irs_positions: Some((0..surfaces).map(|l| [50.0, 10.0 * l as f64]).collect()),
        irs_region: None,
        t0_db: 0.0,
        d0: 1.0,
        rho_si: 0.0,
        rho_id: 0.0,
        sigma_r2,
        sigma_d2,
        p_max,
    }
}

/// Samples layout and fading for a scenario and reduces to effective form,
/// deriving independent layout/channel seeds from one base seed.
pub fn random_effective(sc: &Scenario, seed: u64, mode: NoiseMode) -> Result<EffectiveChannels> {
    let layout = sample_layout(sc, derive_seed(seed, 1));
    let real = sample_channels(sc, &layout, derive_seed(seed, 2))?;
    assemble_effective(&real, mode, sc.sigma_r2)
}

/// Power vector with entries uniform in `[lo, hi]`.
pub fn random_power(seed: u64, k: usize, lo: f64, hi: f64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(k, |_, _| lo + (hi - lo) * rng.random::<f64>())
}

/// Unit-modulus reflection vector with uniform random phases.
pub fn random_phases(seed: u64, n: usize) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVector::from_fn(n, |_, _| {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * rng.random::<f64>())
    })
}

/// Strictly feasible reflection vector: random phases, amplitudes uniform
/// in `[0, 1]`.
pub fn random_feasible_theta(seed: u64, n: usize) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVector::from_fn(n, |_, _| {
        Complex64::from_polar(
            rng.random::<f64>(),
            2.0 * std::f64::consts::PI * rng.random::<f64>(),
        )
    })
}

/// Complex vector with independent `CN(0, var)` entries.
pub fn random_complex(seed: u64, n: usize, var: f64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (var / 2.0).sqrt();
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(rand_distr::StandardNormal);
        let im: f64 = rng.sample(rand_distr::StandardNormal);
        Complex64::new(s * re, s * im)
    })
}

/// Real vector with independent `N(0, var)` entries.
pub fn random_real(seed: u64, n: usize, var: f64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = var.sqrt();
    DVector::from_fn(n, |_, _| {
        let x: f64 = rng.sample(rand_distr::StandardNormal);
        s * x
    })
}
