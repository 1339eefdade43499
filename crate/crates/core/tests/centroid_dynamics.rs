//! Centroid ensemble and trajectories against Boltzmann quadrature and the
//! harmonic closed form.

use epac_core::cmd::{
    boltzmann_average, centroid_correlation_on, propagate_centroid, sample_centroids,
    CorrelationOptions, SamplingOptions, Yoshida4,
};
use epac_core::{PotentialSpec, SystemParams};

const WINDOW: (f64, f64) = (-3.0, 3.0);

#[test]
fn ensemble_histogram_follows_the_boltzmann_density() {
    let pot = PotentialSpec::double_well();
    let beta = 1.0;
    let n = 4000;
    let ens = sample_centroids(
        &pot,
        WINDOW,
        &SystemParams::natural(beta),
        1.0,
        n,
        3,
        &SamplingOptions::default(),
    )
    .unwrap();
    assert_eq!(ens.len(), n);
    let edges: Vec<f64> = (0..=20).map(|i| -2.5 + 0.25 * i as f64).collect();
    let mut chi2 = 0.0;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let p = boltzmann_average(&pot, beta, WINDOW.0, WINDOW.1, |q| {
            if q >= lo && q < hi {
                1.0
            } else {
                0.0
            }
        });
        let expected = p * n as f64;
        let observed = ens.positions.iter().filter(|&&q| q >= lo && q < hi).count() as f64;
        chi2 += (observed - expected).powi(2) / expected;
    }
    // 20 bins; mean 20, sd ~6.3
    assert!(chi2 < 50.0, "chi2 = {chi2}");
}

#[test]
fn ensemble_moments_match_quadrature() {
    let pot = PotentialSpec::double_well();
    let beta = 2.0;
    let ens = sample_centroids(
        &pot,
        WINDOW,
        &SystemParams::natural(beta),
        1.5,
        4000,
        8,
        &SamplingOptions::default(),
    )
    .unwrap();
    assert!(
        ens.kinetic_temperature().within(1.0 / beta, 4.0),
        "{:?}",
        ens.kinetic_temperature()
    );
    assert!(
        ens.mean_position().within(0.0, 4.0),
        "{:?}",
        ens.mean_position()
    );
    let q2 = boltzmann_average(&pot, beta, WINDOW.0, WINDOW.1, |q| q * q);
    assert!(
        ens.second_moment().within(q2, 4.0),
        "{:?} vs {q2}",
        ens.second_moment()
    );
}

#[test]
fn harmonic_centroid_correlation_is_a_cosine() {
    let pot = PotentialSpec::harmonic(1.0, 1.0);
    let beta = 2.0;
    let ens = sample_centroids(
        &pot,
        (-5.0, 5.0),
        &SystemParams::natural(beta),
        1.0,
        2000,
        4,
        &SamplingOptions::default(),
    )
    .unwrap();
    let opts = CorrelationOptions {
        t_max: 10.0,
        ..Default::default()
    };
    let c = centroid_correlation_on(&ens, &pot, (-5.0, 5.0), &opts).unwrap();
    let stderr = c.stderr.as_ref().unwrap();
    for ((t, v), e) in c.times.iter().zip(&c.values).zip(stderr).step_by(20) {
        let want = t.cos() / beta;
        assert!(
            (v.re - want).abs() < 4.0 * e + 1e-3,
            "t = {t}: {} vs {want} (+- {e})",
            v.re
        );
    }
}

#[test]
fn trajectories_conserve_energy_and_reverse() {
    let pot = PotentialSpec::double_well();
    let dt = 0.005;
    let steps = 4000;
    let fwd = propagate_centroid(&pot, &Yoshida4, 1.0, (0.3, 1.1), dt, steps, 1, 1e-6).unwrap();
    assert!(fwd.energy_drift < 1e-8, "drift {}", fwd.energy_drift);
    let end = (
        *fwd.positions.last().unwrap(),
        -*fwd.momenta.last().unwrap(),
    );
    let back = propagate_centroid(&pot, &Yoshida4, 1.0, end, dt, steps, steps, 1e-6).unwrap();
    assert!((back.positions.last().unwrap() - 0.3).abs() < 1e-9);
    assert!((back.momenta.last().unwrap() + 1.1).abs() < 1e-9);
}
