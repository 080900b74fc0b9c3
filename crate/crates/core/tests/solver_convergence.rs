//! Behavior of the full alternating solver: monotone objective traces,
//! warm-start dominance over the single-block schemes, determinism, and a
//! closed-form single-user optimum.

use irsnet::baselines::{run_scheme, SchemeId};
use irsnet::channel::NoiseMode;
use irsnet::instances;
use irsnet::oracle::check_monotone;
use irsnet::solver::{solve, solve_multi_start, SolverOptions, StopReason};
use irsnet::{channel, rate};

#[test]
fn objective_traces_never_decrease() {
    let mut checked = 0;
    for seed in 0..30u64 {
        let pairs = [2, 4, 6][(seed % 3) as usize];
        let surfaces = [1, 2, 4][((seed / 3) % 3) as usize];
        let elements = [2, 4][((seed / 9) % 2) as usize];
        let mode = if seed % 2 == 0 { NoiseMode::Expectation } else { NoiseMode::Realization };
        let sc = instances::synthetic_scenario(pairs, surfaces, elements, 1.0, 0.05, 0.1);
        let eff = instances::random_effective(&sc, seed, mode).unwrap();
        let options = SolverOptions { epsilon: 1e-7, max_iter: 120, seed, ..Default::default() };
        let (_, trace) = solve(&eff, sc.p_max, sc.sigma_d2, &options);
        let f1 = trace.f1_values();
        let report = check_monotone(&f1, 1e-9);
        assert!(
            report.pass,
            "seed {seed}: f1 dropped by {} at iteration {:?}",
            report.worst_drop, report.at
        );
        // The genuine sum rate rides the same monotone chain.
        let rates: Vec<f64> = trace.records.iter().map(|r| r.sum_rate).collect();
        assert!(check_monotone(&rates, 1e-9).pass, "sum rate dropped at seed {seed}");
        checked += f1.len();
    }
    assert!(checked > 100, "traces were unexpectedly short");
}

#[test]
fn warm_started_joint_dominates_each_single_block_scheme() {
    for seed in 0..12u64 {
        let sc = instances::synthetic_scenario(4, 2, 3, 1.0, 0.05, 0.1);
        let eff = instances::random_effective(&sc, seed, NoiseMode::Expectation).unwrap();
        let options = SolverOptions { seed, ..Default::default() };
        for scheme in [SchemeId::PowerOnly, SchemeId::PhaseOnly] {
            let (state, report, _) = run_scheme(scheme, &eff, sc.p_max, sc.sigma_d2, &options);
            let warm = SolverOptions {
                theta_init: Some(state.theta.clone()),
                p_init: Some(state.p.clone()),
                ..options.clone()
            };
            let (_, warm_trace) = solve(&eff, sc.p_max, sc.sigma_d2, &warm);
            assert!(
                warm_trace.final_sum_rate() >= report.sum - 1e-9 * report.sum.abs(),
                "seed {seed}: joint warm-started from {scheme} fell from {} to {}",
                report.sum,
                warm_trace.final_sum_rate()
            );
        }
    }
}

#[test]
fn identical_options_reproduce_identical_runs() {
    let sc = instances::synthetic_scenario(4, 2, 4, 1.0, 0.05, 0.1);
    let eff = instances::random_effective(&sc, 99, NoiseMode::Realization).unwrap();
    let options = SolverOptions { epsilon: 1e-6, seed: 7, ..Default::default() };
    let (state_a, trace_a) = solve(&eff, sc.p_max, sc.sigma_d2, &options);
    let (state_b, trace_b) = solve(&eff, sc.p_max, sc.sigma_d2, &options);
    assert_eq!(state_a.p, state_b.p);
    assert_eq!(state_a.theta, state_b.theta);
    assert_eq!(state_a.lambda, state_b.lambda);
    assert_eq!(trace_a.f1_values(), trace_b.f1_values());
    assert_eq!(trace_a.iterations(), trace_b.iterations());
}

#[test]
fn single_user_reaches_the_coherent_optimum() {
    // One pair, one surface: optimal power is the full budget and the
    // optimal reflection vector phase-aligns every element with its channel
    // coefficient, giving |θᴴv| = Σ_n |v_n|.
    let sc = instances::synthetic_scenario(1, 1, 4, 2.0, 0.01, 0.1);
    let eff = instances::random_effective(&sc, 11, NoiseMode::Expectation).unwrap();
    let options = SolverOptions { epsilon: 1e-10, max_iter: 50, ..Default::default() };
    let (state, trace) = solve(&eff, sc.p_max, sc.sigma_d2, &options);
    assert_eq!(state.p[0], sc.p_max);
    assert_eq!(trace.reason, StopReason::EpsilonReached);
    let v = &eff.v[0][0];
    let coherent: f64 = v.iter().map(|z| z.norm()).sum();
    let achieved = state.theta.dotc(v).norm();
    assert!(
        achieved >= coherent * (1.0 - 1e-6),
        "reflection gain {achieved} vs coherent bound {coherent}"
    );
}

#[test]
fn tiny_single_element_network_converges_in_three_iterations() {
    let sc = instances::synthetic_scenario(1, 1, 1, 1.0, 0.01, 0.1);
    let eff = instances::random_effective(&sc, 5, NoiseMode::Expectation).unwrap();
    let (state, trace) = solve(&eff, sc.p_max, sc.sigma_d2, &SolverOptions::default());
    assert!(trace.iterations() <= 3, "took {} iterations", trace.iterations());
    assert_eq!(state.p[0], sc.p_max);
    assert!((state.theta[0].norm() - 1.0).abs() <= 1e-8);
}

#[test]
fn reference_network_converges_within_the_iteration_budget() {
    // Full-size network at the default geometry; a handful of seeds as a
    // smoke version of the larger statistical run in the acceptance suite.
    let sc = channel::Scenario {
        p_max: channel::Scenario::default().power_for_snr_db(35.0),
        ..Default::default()
    };
    for seed in 0..3u64 {
        let layout = channel::sample_layout(&sc, instances::derive_seed(seed, 1));
        let real =
            channel::sample_channels(&sc, &layout, instances::derive_seed(seed, 2)).unwrap();
        let eff =
            channel::assemble_effective(&real, NoiseMode::Expectation, sc.sigma_r2).unwrap();
        let options =
            SolverOptions { epsilon: 1e-3, max_iter: 200, seed, ..Default::default() };
        let (state, trace) = solve(&eff, sc.p_max, sc.sigma_d2, &options);
        assert_eq!(trace.reason, StopReason::EpsilonReached, "seed {seed} hit the cap");
        assert!(trace.iterations() < 200);
        let report = rate::rates(&rate::sinr(&state.p, &state.theta, &eff, sc.sigma_d2)).unwrap();
        assert!(report.sum > 0.0);
    }
}

#[test]
fn scheme_runs_are_consistent_with_their_frozen_blocks() {
    let sc = instances::synthetic_scenario(4, 2, 3, 1.0, 0.05, 0.1);
    let eff = instances::random_effective(&sc, 17, NoiseMode::Expectation).unwrap();
    let options = SolverOptions { seed: 17, ..Default::default() };

    let (power_state, _, _) =
        run_scheme(SchemeId::PowerOnly, &eff, sc.p_max, sc.sigma_d2, &options);
    assert_eq!(power_state.theta, irsnet::solver::random_phase_init(eff.num_elements, 17));

    let (phase_state, _, _) =
        run_scheme(SchemeId::PhaseOnly, &eff, sc.p_max, sc.sigma_d2, &options);
    assert!(phase_state.p.iter().all(|&x| x == sc.p_max));
}

#[test]
fn activation_starts_escape_a_single_user_trap() {
    // A two-pair instance whose best operating point serves one user alone.
    // From full power the alternating loop keeps both users transmitting
    // and lands well below that point; the activation starts reach it.
    let mut sc = channel::Scenario {
        num_pairs: 2,
        elements_per_surface: vec![2],
        irs_positions: Some(vec![[150.0, 0.0]]),
        irs_region: None,
        ..Default::default()
    };
    sc.p_max = sc.power_for_snr_db(35.0);
    let eff =
        instances::random_effective(&sc, instances::derive_seed(44, 2), NoiseMode::Expectation)
            .unwrap();
    let options = SolverOptions {
        epsilon: 1e-8,
        max_iter: 300,
        seed: instances::derive_seed(44, 3),
        ..Default::default()
    };

    let (single_state, _) = solve(&eff, sc.p_max, sc.sigma_d2, &options);
    let single = rate::sum_rate(&single_state.p, &single_state.theta, &eff, sc.sigma_d2);
    let (multi_state, _) = solve_multi_start(&eff, sc.p_max, sc.sigma_d2, &options, 2);
    let multi = rate::sum_rate(&multi_state.p, &multi_state.theta, &eff, sc.sigma_d2);

    // Independent yardstick: exhaustive 16-phase grid over every 8-level
    // power pair.
    let mut grid_best = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            let p = nalgebra::DVector::from_vec(vec![
                sc.p_max * i as f64 / 7.0,
                sc.p_max * j as f64 / 7.0,
            ]);
            let (_, best) = irsnet::oracle::brute_force_theta(&eff, &p, sc.sigma_d2, 16).unwrap();
            grid_best = grid_best.max(best);
        }
    }
    assert!(
        single < 0.7 * grid_best,
        "instance no longer traps the plain solver: {single} vs grid {grid_best}"
    );
    assert!(
        multi >= 0.98 * grid_best,
        "multi-start fell short: {multi} vs grid {grid_best}"
    );
    // One of the single-user starts ends with exactly one active user.
    assert_eq!(multi_state.p.iter().filter(|&&x| x == 0.0).count(), 1);
}
