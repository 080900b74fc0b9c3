//! Statistical properties of the random geometry and fading draws, checked
//! by Monte-Carlo moments, plus exact structural properties of the
//! assembled effective channels.

use irsnet::channel::{
    assemble_effective, sample_channels, sample_layout, path_loss, Disk, NoiseCov, NoiseMode,
    Scenario,
};
use irsnet::instances;
use num_complex::Complex64;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[test]
fn disk_sampling_matches_uniform_area_moments() {
    // Uniform over a disk of radius R: E[distance from center] = 2R/3.
    let sc = Scenario { num_pairs: 1, ..Default::default() };
    let draws = 100_000;
    let mut acc = 0.0;
    for seed in 0..draws {
        let layout = sample_layout(&sc, seed);
        acc += dist(layout.sources[0], sc.source_region.center);
    }
    let mean = acc / draws as f64;
    let expected = 2.0 * sc.source_region.radius / 3.0;
    let rel = (mean - expected).abs() / expected;
    assert!(rel < 0.02, "mean center distance {mean} vs {expected} (rel {rel:.4})");
}

#[test]
fn rectangle_sampling_matches_uniform_moments() {
    let sc = Scenario {
        irs_positions: None,
        irs_region: Some(irsnet::channel::Rect { x: [50.0, 250.0], y: [-60.0, 60.0] }),
        ..Default::default()
    };
    let draws = 100_000;
    let (mut mx, mut my, mut vx) = (0.0, 0.0, 0.0);
    for seed in 0..draws {
        let layout = sample_layout(&sc, seed);
        let p = layout.surfaces[0];
        mx += p[0];
        my += p[1];
        vx += (p[0] - 150.0) * (p[0] - 150.0);
        assert!((50.0..=250.0).contains(&p[0]) && (-60.0..=60.0).contains(&p[1]));
    }
    let n = draws as f64;
    assert!((mx / n - 150.0).abs() < 1.0, "x mean {}", mx / n);
    assert!((my / n).abs() < 1.0, "y mean {}", my / n);
    // Var = width²/12 for a uniform interval.
    let var_expected = 200.0f64.powi(2) / 12.0;
    assert!((vx / n - var_expected).abs() / var_expected < 0.02);
}

#[test]
fn fading_entries_have_the_path_loss_variance() {
    // Fixed geometry, many channel draws: the empirical variance of each
    // fading entry must match the distance-derived value, and real/imaginary
    // parts must be uncorrelated with equal halves.
    let sc = Scenario {
        num_pairs: 1,
        elements_per_surface: vec![2],
        irs_positions: Some(vec![[100.0, 50.0]]),
        source_region: Disk { center: [0.0, 0.0], radius: 0.0 },
        dest_region: Disk { center: [300.0, 0.0], radius: 0.0 },
        ..Default::default()
    };
    let layout = sample_layout(&sc, 0);
    let kappa_h = path_loss(dist(layout.sources[0], [100.0, 50.0]), sc.d0, sc.rho_si, sc.t0_db)
        .unwrap();
    let kappa_g = path_loss(dist([100.0, 50.0], layout.dests[0]), sc.d0, sc.rho_id, sc.t0_db)
        .unwrap();

    let draws = 100_000;
    let (mut h2, mut g2, mut h_re2, mut h_im2, mut cross) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for seed in 0..draws {
        let real = sample_channels(&sc, &layout, seed).unwrap();
        let h = real.h[0][0][0];
        let g = real.g[0][0][0];
        h2 += h.norm_sqr();
        g2 += g.norm_sqr();
        h_re2 += h.re * h.re;
        h_im2 += h.im * h.im;
        cross += h.re * h.im;
    }
    let n = draws as f64;
    assert!((h2 / n - kappa_h).abs() / kappa_h < 0.03, "h variance {} vs {kappa_h}", h2 / n);
    assert!((g2 / n - kappa_g).abs() / kappa_g < 0.03, "g variance {} vs {kappa_g}", g2 / n);
    // Circular symmetry: halves equal, components uncorrelated.
    assert!((h_re2 / n - kappa_h / 2.0).abs() / (kappa_h / 2.0) < 0.05);
    assert!((h_im2 / n - kappa_h / 2.0).abs() / (kappa_h / 2.0) < 0.05);
    assert!((cross / n).abs() < 0.05 * kappa_h);
}

#[test]
fn effective_channels_concatenate_per_surface_cascades() {
    // Independent reconstruction of v[i][k] from the raw draws: surface
    // blocks stacked in order, entry m equal to h_m · conj(g_m).
    let sc = Scenario::default();
    let layout = sample_layout(&sc, 3);
    let real = sample_channels(&sc, &layout, 4).unwrap();
    let eff = assemble_effective(&real, NoiseMode::Expectation, sc.sigma_r2).unwrap();
    for i in 0..sc.num_pairs {
        for k in 0..sc.num_pairs {
            let mut offset = 0;
            for l in 0..sc.num_surfaces() {
                for m in 0..sc.elements_per_surface[l] {
                    let want = real.h[l][i][m] * real.g[k][l][m].conj();
                    let got = eff.v[i][k][offset + m];
                    assert_eq!(got, want, "pair ({i},{k}), surface {l}, element {m}");
                }
                offset += sc.elements_per_surface[l];
            }
        }
    }
}

#[test]
fn realization_noise_uses_one_shared_draw() {
    // C_k must be exactly z_k z_kᴴ with z_k = n ⊙ conj(g̃_k), the SAME n for
    // every destination.
    let sc = Scenario::default();
    let layout = sample_layout(&sc, 5);
    let real = sample_channels(&sc, &layout, 6).unwrap();
    let eff = assemble_effective(&real, NoiseMode::Realization, sc.sigma_r2).unwrap();
    let n_draw = real.noise_draw.as_ref().unwrap();
    for k in 0..sc.num_pairs {
        let mut z = Vec::with_capacity(eff.num_elements);
        let mut offset = 0;
        for l in 0..sc.num_surfaces() {
            for m in 0..sc.elements_per_surface[l] {
                z.push(n_draw[offset + m] * real.g[k][l][m].conj());
            }
            offset += sc.elements_per_surface[l];
        }
        match &eff.noise_cov[k] {
            NoiseCov::Dense(c) => {
                for r in 0..eff.num_elements {
                    for s in 0..eff.num_elements {
                        let want = z[r] * z[s].conj();
                        let diff: Complex64 = c[(r, s)] - want;
                        assert!(diff.norm() <= 1e-15 * want.norm().max(1e-300));
                    }
                }
            }
            other => panic!("expected dense covariance, got {other:?}"),
        }
    }
}

#[test]
fn expectation_noise_matches_marginal_variances() {
    // Diagonal entries are σ_r²·|g̃_k|² per element.
    let sc = Scenario::default();
    let layout = sample_layout(&sc, 7);
    let real = sample_channels(&sc, &layout, 8).unwrap();
    let eff = assemble_effective(&real, NoiseMode::Expectation, sc.sigma_r2).unwrap();
    for k in 0..sc.num_pairs {
        match &eff.noise_cov[k] {
            NoiseCov::Diagonal(d) => {
                let mut offset = 0;
                for l in 0..sc.num_surfaces() {
                    for m in 0..sc.elements_per_surface[l] {
                        let want = sc.sigma_r2 * real.g[k][l][m].norm_sqr();
                        assert!((d[offset + m] - want).abs() <= 1e-15 * want.max(1e-300));
                    }
                    offset += sc.elements_per_surface[l];
                }
            }
            other => panic!("expected diagonal covariance, got {other:?}"),
        }
    }
}

#[test]
fn seeds_pin_all_draws_and_salts_separate_streams() {
    let sc = Scenario::default();
    let layout_a = sample_layout(&sc, 42);
    let layout_b = sample_layout(&sc, 42);
    assert_eq!(layout_a, layout_b);
    let layout_c = sample_layout(&sc, 43);
    assert_ne!(layout_a.sources, layout_c.sources);

    let ra = sample_channels(&sc, &layout_a, 1).unwrap();
    let rb = sample_channels(&sc, &layout_a, 1).unwrap();
    assert_eq!(ra.h[0][0], rb.h[0][0]);
    assert_eq!(ra.noise_draw, rb.noise_draw);
    let rc = sample_channels(&sc, &layout_a, 2).unwrap();
    assert_ne!(ra.h[0][0], rc.h[0][0]);

    assert_ne!(instances::derive_seed(7, 1), instances::derive_seed(7, 2));
}

#[test]
fn source_positions_are_stable_across_surface_counts() {
    // Sweeping the number of surfaces must not disturb the pair geometry
    // for a fixed seed: sources and destinations are drawn first.
    let base = Scenario {
        irs_positions: None,
        irs_region: Some(irsnet::channel::Rect { x: [50.0, 250.0], y: [-60.0, 60.0] }),
        ..Default::default()
    };
    let mut more = base.clone();
    more.elements_per_surface = vec![4; 8];
    let la = sample_layout(&base, 9);
    let lb = sample_layout(&more, 9);
    assert_eq!(la.sources, lb.sources);
    assert_eq!(la.dests, lb.dests);
    assert_eq!(lb.surfaces.len(), 8);
    // The shared prefix of surface draws also coincides.
    assert_eq!(la.surfaces[..], lb.surfaces[..la.surfaces.len()]);
}
