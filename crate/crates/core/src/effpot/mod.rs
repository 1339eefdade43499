//! Effective classical potential from the centroid force, the generating
//! function of a constant source, and the standard effective potential as its
//! Legendre transform.

mod fit;
mod generating;
mod legendre;
mod pipeline;
pub mod quadrature;

pub use fit::{fit_force_polynomial, ForcePolynomial, MAX_CONDITION};
pub use generating::{
    generating_function_from_ecp, generating_function_from_oracle, GeneratingFunction,
    QuadratureOptions,
};
pub use legendre::{
    effective_frequency, effective_frequency_with_window, inverse_legendre_transform,
    legendre_transform, FrequencyEstimate, CURVATURE_WINDOW,
};
pub use pipeline::{
    bootstrap_standard_curve, oracle_standard_curve, run_effective_potential, BootstrapSummary,
    EffectivePotentialResult, EffectivePotentialSettings,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    /// Free energy of the path centroid.
    Classical,
    /// Legendre conjugate of the generating function; convex.
    Standard,
}

/// Additive-constant convention of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// `V(q) = 0` at the given abscissa.
    ZeroAt(f64),
    /// `V = 0` at the minimum (equivalently `w(0) = 0` on the conjugate side).
    ZeroAtMinimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivePotentialCurve {
    pub kind: CurveKind,
    pub beta: f64,
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    /// `dV/dx` at each abscissa (for standard curves, the conjugate source).
    pub slopes: Vec<f64>,
    /// Statistical standard errors; zero where unknown.
    pub stderr: Vec<f64>,
    /// Fitted force for classical curves built from sampled data.
    pub force: Option<ForcePolynomial>,
    pub anchor: Anchor,
    /// Even in its abscissa by construction.
    pub symmetric: bool,
}

impl EffectivePotentialCurve {
    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    /// Second differences `V_{i-1} - 2 V_i + V_{i+1}`.
    pub fn second_differences(&self) -> Vec<f64> {
        self.values
            .windows(3)
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .collect()
    }

    /// True if every second difference is at least `-tolerance`.
    pub fn is_convex(&self, tolerance: f64) -> bool {
        self.second_differences().iter().all(|&d| d >= -tolerance)
    }

    /// Interior indices whose second difference is below `-tolerance[i - 1]`,
    /// one tolerance per second difference.
    pub fn convexity_violations(&self, tolerance: &[f64]) -> Vec<usize> {
        self.second_differences()
            .iter()
            .zip(tolerance)
            .enumerate()
            .filter(|(_, (d, t))| **d < -**t)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Copy with the constant chosen so that the value at abscissa index `i` is zero.
    pub fn shifted_to_zero_at(&self, i: usize) -> Self {
        let c = self.values[i];
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v -= c);
        out.anchor = Anchor::ZeroAt(self.abscissae[i]);
        out
    }
}

/// Classical effective potential `-int_{anchor}^{q} F` tabulated on `grid`.
pub fn integrate_to_ecp(
    force: &ForcePolynomial,
    beta: f64,
    anchor_q: f64,
    grid: &[f64],
) -> Result<EffectivePotentialCurve> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "potential grid must be strictly ascending".into(),
        ));
    }
    Ok(EffectivePotentialCurve {
        kind: CurveKind::Classical,
        beta,
        abscissae: grid.to_vec(),
        values: grid.iter().map(|&q| force.potential(q, anchor_q)).collect(),
        slopes: grid.iter().map(|&q| -force.eval(q)).collect(),
        stderr: grid
            .iter()
            .map(|&q| force.potential_stderr(q, anchor_q))
            .collect(),
        force: Some(force.clone()),
        anchor: Anchor::ZeroAt(anchor_q),
        symmetric: force.odd_only,
    })
}

/// Allowed dip of each second difference below zero: `k` combined standard
/// errors of the bootstrap spread and the quadrature error (which enters a
/// second difference up to four times), plus round-off on the curve's scale.
pub fn convexity_tolerance(
    second_difference_stderr: &[f64],
    quadrature_error: f64,
    k: f64,
    values: &[f64],
) -> Vec<f64> {
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    second_difference_stderr
        .iter()
        .map(|s| k * s.hypot(4.0 * quadrature_error) + 1e-13 * scale)
        .collect()
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_force_integrates_to_parabola() {
        let f = ForcePolynomial::linear(1.0, 2.0);
        let grid = uniform_grid(-2.0, 2.0, 41);
        let ecp = integrate_to_ecp(&f, 1.0, 0.0, &grid).unwrap();
        for (q, v) in ecp.abscissae.iter().zip(&ecp.values) {
            assert!((v - q * q / 2.0).abs() < 1e-14);
        }
        assert_eq!(ecp.values[20], 0.0);
        assert!(ecp.is_convex(0.0));
        assert!(ecp.symmetric);
        let shifted = ecp.shifted_to_zero_at(0);
        assert_eq!(shifted.values[0], 0.0);
    }
}
