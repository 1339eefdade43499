//! Closed-form correlation functions from the curvature of the standard
//! effective potential: a single oscillation mode at the effective frequency.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::effpot::FrequencyEstimate;
use crate::error::{Error, Result};
use crate::series::{CorrelationSeries, LineKind, SeriesKind, SpectralLine, SpectralLines};
use crate::spectra::kubo_factor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpacParameters {
    /// Effective frequency `omega_beta`.
    pub omega_beta: f64,
    /// Minimum of the standard effective potential.
    pub q_min: f64,
    pub mass: f64,
    /// `None` is the zero-temperature limit.
    pub beta: Option<f64>,
    #[serde(default = "unit_hbar")]
    pub hbar: f64,
    /// Kinetic coefficient of the second-order expansion; supplied externally.
    #[serde(default)]
    pub z_beta: Option<f64>,
}

fn unit_hbar() -> f64 {
    1.0
}

impl EpacParameters {
    pub fn new(omega_beta: f64, q_min: f64, mass: f64, beta: Option<f64>) -> Result<Self> {
        let p = Self {
            omega_beta,
            q_min,
            mass,
            beta,
            hbar: 1.0,
            z_beta: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_frequency(f: &FrequencyEstimate, mass: f64, beta: Option<f64>) -> Result<Self> {
        Self::new(f.omega, f.q_min, mass, beta)
    }

    pub fn with_z(mut self, z_beta: f64) -> Result<Self> {
        self.z_beta = Some(z_beta);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {x}"
                )))
            }
        };
        positive("omega_beta", self.omega_beta)?;
        positive("mass", self.mass)?;
        positive("hbar", self.hbar)?;
        if let Some(b) = self.beta {
            positive("beta", b)?;
        }
        if let Some(z) = self.z_beta {
            positive("z_beta", z)?;
        }
        if !self.q_min.is_finite() {
            return Err(Error::InvalidParameter("q_min must be finite".into()));
        }
        Ok(())
    }

    /// `d^2 V / dQ^2` at the minimum, `m omega_beta^2`.
    pub fn curvature(&self) -> f64 {
        self.mass * self.omega_beta * self.omega_beta
    }

    /// `omega^S = sqrt(curvature / Z)`; needs `z_beta`.
    pub fn second_order_frequency(&self) -> Result<f64> {
        let z = self.z()?;
        Ok(self.omega_beta * (self.mass / z).sqrt())
    }

    fn z(&self) -> Result<f64> {
        self.z_beta
            .ok_or_else(|| Error::InvalidParameter("second-order EPAC needs z_beta".into()))
    }

    fn finite_beta(&self) -> Result<f64> {
        self.beta.ok_or_else(|| {
            Error::InvalidParameter("finite-temperature form called with beta = infinity".into())
        })
    }
}

/// `coth(x / 2) = 1 + 2 / (e^x - 1)`.
fn coth_half(x: f64) -> f64 {
    1.0 + 2.0 / x.exp_m1()
}

/// `(hbar / 2 k w) [coth(beta hbar w / 2) cos wt - i sin wt] + Q^2`.
fn single_mode(
    kinetic: f64,
    omega: f64,
    beta: f64,
    p: &EpacParameters,
    times: &[f64],
) -> Vec<Complex64> {
    let a = p.hbar / (2.0 * kinetic * omega);
    let c = coth_half(beta * p.hbar * omega);
    let q2 = p.q_min * p.q_min;
    times
        .iter()
        .map(|&t| {
            let (s, co) = (omega * t).sin_cos();
            Complex64::new(a * c * co + q2, -a * s)
        })
        .collect()
}

/// `(hbar / 2 k w) e^{-i w t} + Q^2`.
fn ground_mode(kinetic: f64, omega: f64, p: &EpacParameters, times: &[f64]) -> Vec<Complex64> {
    let a = p.hbar / (2.0 * kinetic * omega);
    let q2 = p.q_min * p.q_min;
    times
        .iter()
        .map(|&t| Complex64::from_polar(a, -omega * t) + q2)
        .collect()
}

/// Leading-order approximate correlation with the bare mass; `z_beta` is ignored.
pub fn epac_correlation(p: &EpacParameters, times: &[f64]) -> Result<CorrelationSeries> {
    p.validate()?;
    let beta = p.finite_beta()?;
    let values = single_mode(p.mass, p.omega_beta, beta, p, times);
    Ok(CorrelationSeries::new(
        SeriesKind::Epac,
        Some(beta),
        times.to_vec(),
        values,
    ))
}

/// Second order: mass replaced by `Z_beta`, frequency by `sqrt(curvature / Z_beta)`.
pub fn epac2_correlation(p: &EpacParameters, times: &[f64]) -> Result<CorrelationSeries> {
    p.validate()?;
    let beta = p.finite_beta()?;
    let values = single_mode(p.z()?, p.second_order_frequency()?, beta, p, times);
    Ok(CorrelationSeries::new(
        SeriesKind::Epac2,
        Some(beta),
        times.to_vec(),
        values,
    ))
}

/// Zero-temperature limit of the leading order; `beta` must be `None`.
pub fn epac_zero_temperature(p: &EpacParameters, times: &[f64]) -> Result<CorrelationSeries> {
    p.validate()?;
    if p.beta.is_some() {
        return Err(Error::InvalidParameter(
            "zero-temperature form needs beta = infinity".into(),
        ));
    }
    let values = ground_mode(p.mass, p.omega_beta, p, times);
    Ok(CorrelationSeries::new(
        SeriesKind::EpacZeroTemperature,
        None,
        times.to_vec(),
        values,
    ))
}

/// Zero-temperature limit of the second order.
pub fn epac2_zero_temperature(p: &EpacParameters, times: &[f64]) -> Result<CorrelationSeries> {
    p.validate()?;
    if p.beta.is_some() {
        return Err(Error::InvalidParameter(
            "zero-temperature form needs beta = infinity".into(),
        ));
    }
    let values = ground_mode(p.z()?, p.second_order_frequency()?, p, times);
    Ok(CorrelationSeries::new(
        SeriesKind::EpacZeroTemperature,
        None,
        times.to_vec(),
        values,
    ))
}

/// `rho(omega) = (pi hbar / m w) [delta(omega - w) - delta(omega + w)]`.
pub fn epac_spectral_function(p: &EpacParameters) -> Result<SpectralLines> {
    p.validate()?;
    let w = PI * p.hbar / (p.mass * p.omega_beta);
    Ok(SpectralLines {
        kind: LineKind::SpectralFunction,
        beta: p.beta,
        lines: vec![
            SpectralLine {
                frequency: -p.omega_beta,
                weight: -w,
            },
            SpectralLine {
                frequency: p.omega_beta,
                weight: w,
            },
        ],
    })
}

/// Lines at `+-omega_beta` with weight `E(omega) pi / (beta m omega_beta^2)`,
/// plus `2 pi Q_min^2` at zero frequency when `Q_min != 0`.
pub fn epac_spectrum(p: &EpacParameters) -> Result<SpectralLines> {
    p.validate()?;
    let beta = p.finite_beta()?;
    let canonical = PI / (beta * p.mass * p.omega_beta * p.omega_beta);
    let mut lines = vec![SpectralLine {
        frequency: -p.omega_beta,
        weight: canonical * kubo_factor(-p.omega_beta, beta, p.hbar),
    }];
    if p.q_min != 0.0 {
        lines.push(SpectralLine {
            frequency: 0.0,
            weight: 2.0 * PI * p.q_min * p.q_min,
        });
    }
    lines.push(SpectralLine {
        frequency: p.omega_beta,
        weight: canonical * kubo_factor(p.omega_beta, beta, p.hbar),
    });
    Ok(SpectralLines {
        kind: LineKind::Epac,
        beta: Some(beta),
        lines,
    })
}
