//! Sampler checks against Gaussian integrals, parity and the eigensolver.

use epac_core::oracle::{
    exact_canonical_correlation, required_states, solve_eigensystem, GridSpec,
};
use epac_core::pimd::{
    centroid_force_grid, centroid_grid, centroid_variance_estimate, sample_constrained,
    NormalModes, SamplerConfig,
};
use epac_core::stats::linear_fit;
use epac_core::{PotentialSpec, SystemParams};

fn short(steps: usize) -> SamplerConfig {
    SamplerConfig {
        equilibration_steps: 5_000,
        production_steps: steps,
        ..Default::default()
    }
}

#[test]
fn harmonic_mean_force_is_linear_and_exact() {
    let pot = PotentialSpec::harmonic(2.0, 1.5);
    let sys = SystemParams::natural(1.0);
    let cfg = SamplerConfig {
        trotter: Some(32),
        ..short(20_000)
    };
    for q_c in [-1.2, 0.0, 0.7] {
        let s = sample_constrained(&pot, &sys, q_c, &cfg).unwrap();
        let want = -2.0 * 1.5 * 1.5 * q_c;
        assert!(
            s.force.within(want, 3.0) || (s.force.mean - want).abs() < 1e-10,
            "{s:?}"
        );
        assert!(s.constraint_error < 1e-10);
        assert!(s.force.stderr > 0.0);
    }
    let grid = centroid_grid(-1.0, 1.0, 5);
    let table = centroid_force_grid(&pot, &sys, &grid, &cfg).unwrap();
    table.validate().unwrap();
    let (_, slope, _) = linear_fit(&table.q_c, &table.force);
    assert!((slope / -4.5 - 1.0).abs() < 0.02, "slope {slope}");
}

#[test]
fn extended_energy_drift_is_small() {
    let pot = PotentialSpec::double_well();
    let s = sample_constrained(&pot, &SystemParams::natural(1.0), 0.5, &short(100_000)).unwrap();
    assert!(s.drift < 1e-4, "relative drift {}", s.drift);
    assert!(s.constraint_error < 1e-10);
}

#[test]
fn mean_force_is_odd_for_symmetric_potential() {
    let pot = PotentialSpec::double_well();
    let sys = SystemParams::natural(1.0);
    let cfg = short(40_000);
    let zero = sample_constrained(&pot, &sys, 0.0, &cfg).unwrap();
    assert!(zero.force.within(0.0, 3.0), "{zero:?}");
    let plus = sample_constrained(&pot, &sys, 0.8, &cfg).unwrap();
    let minus = sample_constrained(&pot, &sys, -0.8, &SamplerConfig { stream: 7, ..cfg }).unwrap();
    let combined = (plus.force.stderr.powi(2) + minus.force.stderr.powi(2)).sqrt();
    assert!((plus.force.mean + minus.force.mean).abs() < 3.0 * combined);
}

#[test]
fn centroid_potential_is_a_double_well_at_unit_beta() {
    let pot = PotentialSpec::double_well();
    let sys = SystemParams::natural(1.0);
    let cfg = short(20_000);
    // outward push near the barrier, restoring force beyond the wells
    assert!(
        sample_constrained(&pot, &sys, 0.5, &cfg)
            .unwrap()
            .force
            .mean
            > 0.2
    );
    assert!(
        sample_constrained(&pot, &sys, 2.5, &cfg)
            .unwrap()
            .force
            .mean
            < -1.0
    );
}

#[test]
fn fixed_seed_reproduces_table_bitwise() {
    let pot = PotentialSpec::double_well();
    let sys = SystemParams::natural(1.0);
    let grid = centroid_grid(-1.0, 1.0, 3);
    let cfg = short(5_000);
    let a = centroid_force_grid(&pot, &sys, &grid, &cfg).unwrap();
    let b = centroid_force_grid(&pot, &sys, &grid, &cfg).unwrap();
    assert_eq!(a, b);
    let bits =
        |t: &epac_core::pimd::ForceTable| t.force.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    let c = centroid_force_grid(&pot, &sys, &grid, &SamplerConfig { seed: 99, ..cfg }).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn standard_errors_scale_as_inverse_square_root() {
    let pot = PotentialSpec::double_well();
    let sys = SystemParams::natural(1.0);
    let grid = centroid_grid(-1.5, 1.5, 5);
    let a = centroid_force_grid(&pot, &sys, &grid, &short(50_000)).unwrap();
    let b = centroid_force_grid(&pot, &sys, &grid, &short(100_000)).unwrap();
    let pooled =
        |t: &epac_core::pimd::ForceTable| t.stderr.iter().map(|s| s * s).sum::<f64>().sqrt();
    let ratio = pooled(&b) / pooled(&a);
    assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.15, "ratio {ratio}");
}

/// Bead `<q^2>` of the discretized harmonic path integral, from its normal modes.
fn finite_trotter_bead_q2(beta: f64, p: usize) -> f64 {
    let modes = NormalModes::new(p);
    let prefactor = p as f64 / (2.0 * beta * beta);
    modes
        .eigenvalues()
        .iter()
        .map(|l| 1.0 / (beta * (2.0 * prefactor * l + 1.0 / p as f64)))
        .sum::<f64>()
        / p as f64
}

#[test]
fn trotter_bias_decreases_with_bead_number() {
    let pot = PotentialSpec::harmonic(1.0, 1.0);
    let beta = 10.0;
    let sys = SystemParams::natural(beta);
    let exact = 0.5 / (beta / 2.0f64).tanh();
    let mut analytic_bias = Vec::new();
    let mut sampled = Vec::new();
    for p in [8, 16, 32, 64] {
        analytic_bias.push(exact - finite_trotter_bead_q2(beta, p));
        let cfg = SamplerConfig {
            trotter: Some(p),
            ..short(100_000)
        };
        let v = centroid_variance_estimate(&pot, &sys, &cfg).unwrap();
        assert!(
            v.bead_q2.within(finite_trotter_bead_q2(beta, p), 3.0),
            "P = {p}: {:?}",
            v.bead_q2
        );
        sampled.push(v.bead_q2);
    }
    assert!(
        analytic_bias.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0),
        "{analytic_bias:?}"
    );
    for w in sampled.windows(2) {
        let (coarse, fine) = ((exact - w[0].mean).abs(), (exact - w[1].mean).abs());
        let sigma = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(fine < coarse + 3.0 * sigma);
    }
}

#[test]
fn centroid_variance_matches_eigensolver() {
    let grid = GridSpec::new(-12.0, 12.0, 3001).unwrap();
    let ho = PotentialSpec::harmonic(1.0, 1.0);
    let sys = SystemParams::natural(1.0);
    let eig =
        solve_eigensystem(&ho, &sys, &grid, required_states(&ho, &sys, &grid).unwrap()).unwrap();
    let oracle = exact_canonical_correlation(&eig, 1.0, &[0.0])
        .unwrap()
        .values[0]
        .re;
    assert!((oracle - 1.0).abs() < 1e-6);
    let v = centroid_variance_estimate(&ho, &sys, &short(200_000)).unwrap();
    assert!(v.centroid_q2.within(oracle, 3.0), "{:?}", v.centroid_q2);

    let dw = PotentialSpec::double_well();
    let sys = SystemParams::natural(10.0);
    let grid = GridSpec::default_double_well();
    let eig =
        solve_eigensystem(&dw, &sys, &grid, required_states(&dw, &sys, &grid).unwrap()).unwrap();
    let oracle = exact_canonical_correlation(&eig, 10.0, &[0.0])
        .unwrap()
        .values[0]
        .re;
    let v = centroid_variance_estimate(&dw, &sys, &short(400_000)).unwrap();
    assert!(
        v.centroid_q2.within(oracle, 3.0),
        "{:?} vs {oracle}",
        v.centroid_q2
    );
}
