//! Eigen-sums for the exact standard, canonical and ground-state correlations.

use num_complex::Complex64;

use super::EigenSystem;
use crate::error::{Error, Result};
use crate::series::{CorrelationSeries, LineKind, SeriesKind, SpectralLine, SpectralLines};

/// Largest Boltzmann weight allowed for the highest included state.
pub const BOLTZMANN_TAIL_TOLERANCE: f64 = 1e-10;

/// Lines lighter than this are dropped from exact spectra.
const LINE_PRUNE: f64 = 1e-12;

/// Normalized Boltzmann populations `e^{-beta E_n} / Z`, checked for truncation.
fn populations(eig: &EigenSystem, beta: f64) -> Result<Vec<f64>> {
    let e0 = eig.energies[0];
    let raw: Vec<f64> = eig
        .energies
        .iter()
        .map(|e| (-beta * (e - e0)).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    let p: Vec<f64> = raw.iter().map(|w| w / z).collect();
    let tail = *p.last().expect("non-empty eigensystem");
    if tail > BOLTZMANN_TAIL_TOLERANCE {
        return Err(Error::TruncationError {
            tail,
            tolerance: BOLTZMANN_TAIL_TOLERANCE,
        });
    }
    Ok(p)
}

/// `(1 - e^{-x}) / x` for `x >= 0`, series near zero.
fn relaxation_factor(x: f64) -> f64 {
    if x < 1e-6 {
        1.0 - 0.5 * x + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Canonical pair weight `(p_n - p_m) / (beta (E_m - E_n))`, symmetric in `n, m`.
fn canonical_pair_weight(eig: &EigenSystem, p: &[f64], beta: f64, n: usize, m: usize) -> f64 {
    let gap = eig.energies[m] - eig.energies[n];
    let low = if gap >= 0.0 { p[n] } else { p[m] };
    low * relaxation_factor(beta * gap.abs())
}

/// Standard lines: `2 pi p_n |q_mn|^2` at `omega = (E_m - E_n) / hbar`.
pub fn exact_spectrum(eig: &EigenSystem, beta: f64) -> Result<SpectralLines> {
    let p = populations(eig, beta)?;
    let lines = pairs(eig, |n, m| p[n] * eig.q_element(m, n).powi(2));
    Ok(SpectralLines::from_raw(LineKind::Exact, Some(beta), lines).pruned(LINE_PRUNE))
}

/// Canonical lines, related to [`exact_spectrum`] by the Kubo factor per line.
pub fn canonical_spectrum(eig: &EigenSystem, beta: f64) -> Result<SpectralLines> {
    let p = populations(eig, beta)?;
    let lines = pairs(eig, |n, m| {
        canonical_pair_weight(eig, &p, beta, n, m) * eig.q_element(m, n).powi(2)
    });
    Ok(SpectralLines::from_raw(LineKind::Canonical, Some(beta), lines).pruned(LINE_PRUNE))
}

fn pairs(eig: &EigenSystem, weight: impl Fn(usize, usize) -> f64) -> Vec<SpectralLine> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let k = eig.n_states();
    let mut out = Vec::with_capacity(k * k);
    for n in 0..k {
        for m in 0..k {
            let w = weight(n, m);
            if w != 0.0 {
                out.push(SpectralLine {
                    frequency: eig.frequency(m, n),
                    weight: two_pi * w,
                });
            }
        }
    }
    out
}

/// Sum `sum_l a_l e^{-i omega_l t}` without pruning.
fn synthesize(terms: &[(f64, f64)], times: &[f64]) -> Vec<Complex64> {
    times
        .iter()
        .map(|&t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(omega, a) in terms {
                acc += Complex64::from_polar(a, -omega * t);
            }
            acc
        })
        .collect()
}

/// `C(t) = Z^{-1} sum_nm e^{-beta E_n} e^{-i (E_m - E_n) t / hbar} |<m|q|n>|^2`.
pub fn exact_correlation(eig: &EigenSystem, beta: f64, times: &[f64]) -> Result<CorrelationSeries> {
    let p = populations(eig, beta)?;
    let k = eig.n_states();
    let mut terms = Vec::with_capacity(k * k);
    for n in 0..k {
        for m in 0..k {
            let a = p[n] * eig.q_element(m, n).powi(2);
            if a != 0.0 {
                terms.push((eig.frequency(m, n), a));
            }
        }
    }
    let mut values = synthesize(&terms, times);
    zero_imaginary_at_origin(times, &mut values);
    Ok(CorrelationSeries::new(
        SeriesKind::Exact,
        Some(beta),
        times.to_vec(),
        values,
    ))
}

/// Kubo-transformed correlation; real for every `t` since the pair weights are symmetric.
pub fn exact_canonical_correlation(
    eig: &EigenSystem,
    beta: f64,
    times: &[f64],
) -> Result<CorrelationSeries> {
    let p = populations(eig, beta)?;
    let k = eig.n_states();
    let mut terms = Vec::with_capacity(k * (k + 1) / 2);
    for n in 0..k {
        for m in n..k {
            let w = canonical_pair_weight(eig, &p, beta, n, m) * eig.q_element(m, n).powi(2);
            if w != 0.0 {
                terms.push((eig.frequency(m, n), if m == n { w } else { 2.0 * w }));
            }
        }
    }
    let values = times
        .iter()
        .map(|&t| {
            let re: f64 = terms.iter().map(|&(omega, a)| a * (omega * t).cos()).sum();
            Complex64::new(re, 0.0)
        })
        .collect();
    Ok(CorrelationSeries::new(
        SeriesKind::Canonical,
        Some(beta),
        times.to_vec(),
        values,
    ))
}

/// `<0| q(t) q(0) |0> = sum_m e^{-i (E_m - E_0) t / hbar} |<m|q|0>|^2`.
pub fn zero_temperature_correlation(eig: &EigenSystem, times: &[f64]) -> Result<CorrelationSeries> {
    let k = eig.n_states();
    let top = eig.q_element(k - 1, 0).powi(2);
    if top > BOLTZMANN_TAIL_TOLERANCE {
        return Err(Error::TruncationError {
            tail: top,
            tolerance: BOLTZMANN_TAIL_TOLERANCE,
        });
    }
    let terms: Vec<(f64, f64)> = (0..k)
        .map(|m| (eig.frequency(m, 0), eig.q_element(m, 0).powi(2)))
        .filter(|&(_, a)| a != 0.0)
        .collect();
    let mut values = synthesize(&terms, times);
    zero_imaginary_at_origin(times, &mut values);
    Ok(CorrelationSeries::new(
        SeriesKind::ZeroTemperature,
        None,
        times.to_vec(),
        values,
    ))
}

fn zero_imaginary_at_origin(times: &[f64], values: &mut [Complex64]) {
    for (t, v) in times.iter().zip(values.iter_mut()) {
        if *t == 0.0 {
            v.im = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve_eigensystem, GridSpec};
    use super::*;
    use crate::model::{PotentialSpec, SystemParams};

    fn harmonic() -> EigenSystem {
        solve_eigensystem(
            &PotentialSpec::harmonic(1.0, 1.0),
            &SystemParams::natural(1.0),
            &GridSpec::new(-12.0, 12.0, 3001).unwrap(),
            40,
        )
        .unwrap()
    }

    #[test]
    fn harmonic_standard_correlation() {
        let eig = harmonic();
        let times = [0.0, 0.7, 3.0];
        let c = exact_correlation(&eig, 1.0, &times).unwrap();
        let coth = 1.0 / 0.5_f64.tanh();
        for (t, v) in times.iter().zip(&c.values) {
            let want = Complex64::new(0.5 * coth * t.cos(), -0.5 * t.sin());
            assert!((v - want).norm() < 1e-8, "t={t}: {v} vs {want}");
        }
        assert_eq!(c.values[0].im, 0.0);
    }

    #[test]
    fn harmonic_canonical_closed_form() {
        // canonical correlation of the oscillator: cos(t) / (beta m omega^2)
        let eig = harmonic();
        let c = exact_canonical_correlation(&eig, 1.0, &[0.0, 1.3]).unwrap();
        assert!((c.values[0].re - 1.0).abs() < 1e-8);
        assert!((c.values[1].re - 1.3_f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn harmonic_lines_and_detailed_balance() {
        let eig = harmonic();
        let lines = exact_spectrum(&eig, 1.0).unwrap();
        assert!(lines
            .lines
            .iter()
            .all(|l| (l.frequency.abs() - 1.0).abs() < 1e-6));
        for neg in lines
            .lines
            .iter()
            .filter(|l| l.frequency < 0.0 && l.weight > 1e-8)
        {
            let pos = lines.nearest(-neg.frequency).unwrap();
            assert!((neg.frequency + pos.frequency).abs() < 1e-12);
            let ratio = neg.weight / pos.weight;
            assert!((ratio / (-pos.frequency).exp() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_ground_state() {
        let eig = harmonic();
        let c = zero_temperature_correlation(&eig, &[0.0, 2.0]).unwrap();
        assert!((c.values[0].re - 0.5).abs() < 1e-8);
        let want = Complex64::from_polar(0.5, -2.0);
        assert!((c.values[1] - want).norm() < 1e-8);
    }

    #[test]
    fn truncation_is_detected() {
        let eig = solve_eigensystem(
            &PotentialSpec::harmonic(1.0, 1.0),
            &SystemParams::natural(1.0),
            &GridSpec::default_double_well(),
            5,
        )
        .unwrap();
        assert!(matches!(
            exact_correlation(&eig, 1.0, &[0.0]),
            Err(Error::TruncationError { .. })
        ));
    }

    #[test]
    fn relaxation_factor_limits() {
        assert_eq!(relaxation_factor(0.0), 1.0);
        let x = 1e-3;
        assert!((relaxation_factor(x) - (1.0 - (-x).exp()) / x).abs() < 1e-12);
    }
}
