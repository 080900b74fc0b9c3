//! Reference schemes the joint optimizer is compared against.
//!
//! Both baselines freeze one side of the problem and run the same outer
//! loop on the rest, so any sum-rate gap is attributable to the frozen
//! block alone. For a fair comparison all schemes consume the same
//! effective channels and the same seeded random-phase vector: the
//! power-only scheme keeps that vector forever, the others start from it.


use crate::channel::EffectiveChannels;
use crate::rate::{self, RateReport};
use crate::solver::{run_blocks, BeamformingState, Blocks, ConvergenceTrace, SolverOptions};

/// Which optimization blocks a run updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    /// Alternate over both powers and reflection coefficients.
    Joint,
    /// Optimize powers only; reflection phases stay at their random draw.
    PowerOnly,
    /// Optimize reflection only; every source transmits at full power.
    PhaseOnly,
}

impl SchemeId {
    pub const ALL: [SchemeId; 3] = [SchemeId::Joint, SchemeId::PowerOnly, SchemeId::PhaseOnly];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeId::Joint => "joint",
            SchemeId::PowerOnly => "power_only",
            SchemeId::PhaseOnly => "phase_only",
        }
    }
}

impl std::str::FromStr for SchemeId {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joint" => Ok(SchemeId::Joint),
            "power_only" => Ok(SchemeId::PowerOnly),
            "phase_only" => Ok(SchemeId::PhaseOnly),
            other => Err(crate::Error::Invalid(format!("scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Runs one scheme to convergence and reports the final state, achieved
/// rates, and the iteration trace.
pub fn run_scheme(
    scheme: SchemeId,
    eff: &EffectiveChannels,
    p_max: f64,
    sigma_d2: f64,
    options: &SolverOptions,
) -> (BeamformingState, RateReport, ConvergenceTrace) {
    let blocks = match scheme {
        SchemeId::Joint => Blocks { power: true, theta: true },
        SchemeId::PowerOnly => Blocks { power: true, theta: false },
        SchemeId::PhaseOnly => Blocks { power: false, theta: true },
    };
    let (state, trace) = run_blocks(eff, p_max, sigma_d2, options, blocks);
    let report = rate::rates(&rate::sinr(&state.p, &state.theta, eff, sigma_d2))
        .expect("sinr is nonnegative by construction");
    (state, report, trace)
}

/// Convenience for tests: the achieved sum rate of one scheme.
pub fn scheme_sum_rate(
    scheme: SchemeId,
    eff: &EffectiveChannels,
    p_max: f64,
    sigma_d2: f64,
    options: &SolverOptions,
) -> f64 {
    run_scheme(scheme, eff, p_max, sigma_d2, options).1.sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use crate::channel::NoiseMode;
    use crate::instances;
    use crate::solver::random_phase_init;

    fn setup(seed: u64) -> (EffectiveChannels, f64, f64) {
        let sc = instances::synthetic_scenario(4, 2, 3, 1.0, 0.05, 0.1);
        let eff = instances::random_effective(&sc, seed, NoiseMode::Expectation).unwrap();
        (eff, sc.p_max, sc.sigma_d2)
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in SchemeId::ALL {
            assert_eq!(s.as_str().parse::<SchemeId>().unwrap(), s);
        }
        assert!("both".parse::<SchemeId>().is_err());
    }

    #[test]
    fn power_only_never_touches_the_reflection_vector() {
        let (eff, p_max, sd2) = setup(11);
        let options = SolverOptions { seed: 42, ..Default::default() };
        let (state, _, _) = run_scheme(SchemeId::PowerOnly, &eff, p_max, sd2, &options);
        assert_eq!(state.theta, random_phase_init(eff.num_elements, 42));
    }

    #[test]
    fn phase_only_transmits_at_full_power() {
        let (eff, p_max, sd2) = setup(12);
        let options = SolverOptions::default();
        let (state, _, _) = run_scheme(SchemeId::PhaseOnly, &eff, p_max, sd2, &options);
        assert_eq!(state.p, DVector::from_element(eff.num_users, p_max));
    }

    #[test]
    fn all_schemes_share_the_same_starting_point() {
        let (eff, p_max, sd2) = setup(13);
        let options = SolverOptions { seed: 7, ..Default::default() };
        let starts: Vec<f64> = SchemeId::ALL
            .iter()
            .map(|&s| run_scheme(s, &eff, p_max, sd2, &options).2.records[0].sum_rate)
            .collect();
        assert_eq!(starts[0], starts[1]);
        assert_eq!(starts[0], starts[2]);
    }

    #[test]
    fn joint_matches_or_beats_both_baselines_on_average() {
        let mut sums = [0.0f64; 3];
        for seed in 0..6u64 {
            let (eff, p_max, sd2) = setup(20 + seed);
            let options = SolverOptions { seed, ..Default::default() };
            for (j, &s) in SchemeId::ALL.iter().enumerate() {
                sums[j] += scheme_sum_rate(s, &eff, p_max, sd2, &options);
            }
        }
        assert!(sums[0] > sums[1], "joint should beat power-only on average");
        assert!(sums[0] > sums[2], "joint should beat phase-only on average");
    }
}
