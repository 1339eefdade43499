//! Generating function `w(J)` of a constant source coupled to the centroid.

use log::warn;
use serde::{Deserialize, Serialize};

use super::quadrature::gauss_legendre;
use super::{CurveKind, EffectivePotentialCurve};
use crate::error::{Error, Result};
use crate::model::{PotentialSpec, SystemParams};
use crate::oracle::{tilted_generating_function, GridSpec};

/// `w(J)` on a source grid, with the constant fixed by `w(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratingFunction {
    pub beta: f64,
    pub sources: Vec<f64>,
    pub values: Vec<f64>,
    /// `dw/dJ`, the mean centroid position under the tilted weight.
    pub slopes: Vec<f64>,
    /// Largest fraction of the integrand carried outside the sampled centroid window.
    pub outside_mass: f64,
    /// Estimated absolute error of `values` from quadrature refinement.
    pub quadrature_error: f64,
    /// Even in `J` by construction.
    pub symmetric: bool,
}

impl GeneratingFunction {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Second differences in `J`; non-negative for a convex function.
    pub fn second_differences(&self) -> Vec<f64> {
        self.values
            .windows(3)
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureOptions {
    /// The integration range extends the sampled window by this fraction of
    /// its half-width on each side.
    pub extension: f64,
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    pub initial_panels: usize,
    pub max_panels: usize,
    /// Relative change of `log Z` between refinements accepted as converged.
    pub tolerance: f64,
    /// Outside-window mass fraction that triggers a warning.
    pub outside_warning: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            extension: 0.25,
            order: 10,
            initial_panels: 32,
            max_panels: 16_384,
            tolerance: 1e-13,
            outside_warning: 0.01,
        }
    }
}

/// Integrand peaks closer than this fraction of the range to an edge are refused.
const EDGE_FRACTION: f64 = 0.05;

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    potential: Vec<f64>,
}

impl Rule {
    fn new(
        ecp_potential: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        panels: usize,
        order: usize,
    ) -> Self {
        let (x, w) = gauss_legendre(order);
        let width = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * width;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * width * xi);
                weights.push(0.5 * width * wi);
            }
        }
        let potential = nodes.iter().map(|&q| ecp_potential(q)).collect();
        Self {
            nodes,
            weights,
            potential,
        }
    }

    /// `(log int e^{beta (J q - V)}, <q>, mass outside [a, b], peak position,
    /// integrand at the ends relative to its peak)`.
    fn moments(&self, beta: f64, source: f64, inside: (f64, f64)) -> Moments {
        let exponent = |i: usize| beta * (source * self.nodes[i] - self.potential[i]);
        let (mut peak, mut top) = (0, f64::NEG_INFINITY);
        for i in 0..self.nodes.len() {
            let e = exponent(i);
            if e > top {
                top = e;
                peak = i;
            }
        }
        let (mut z, mut zq, mut outside) = (0.0, 0.0, 0.0);
        for i in 0..self.nodes.len() {
            let term = self.weights[i] * (exponent(i) - top).exp();
            z += term;
            zq += term * self.nodes[i];
            if self.nodes[i] < inside.0 || self.nodes[i] > inside.1 {
                outside += term;
            }
        }
        let last = self.nodes.len() - 1;
        Moments {
            log_z: top + z.ln(),
            mean: zq / z,
            outside: outside / z,
            peak: self.nodes[peak],
            edge: (exponent(0) - top).exp().max((exponent(last) - top).exp()),
        }
    }
}

struct Moments {
    log_z: f64,
    mean: f64,
    outside: f64,
    peak: f64,
    edge: f64,
}

/// `w(J) = (1/beta) log int dq e^{beta (J q - V^c(q))} + C` with `w(0) = 0`.
///
/// The integral runs over the sampled window extended on both sides, using
/// the fitted force polynomial as the analytic continuation of `V^c`. Panels
/// are doubled until `log Z` is stable for every source.
pub fn generating_function_from_ecp(
    ecp: &EffectivePotentialCurve,
    sources: &[f64],
    opts: &QuadratureOptions,
) -> Result<GeneratingFunction> {
    if ecp.kind != CurveKind::Classical {
        return Err(Error::InvalidParameter(
            "generating function needs a classical curve".into(),
        ));
    }
    let force = ecp
        .force
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("classical curve carries no fitted force".into()))?;
    let beta = ecp.beta;
    let (a, b) = force.window;
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a) * (1.0 + opts.extension);
    let (lo, hi) = (centre - half, centre + half);
    let potential = |q: f64| force.potential(q, 0.0);

    let evaluate = |rule: &Rule| -> Result<Vec<Moments>> {
        let mut out = Vec::with_capacity(sources.len() + 1);
        for &j in std::iter::once(&0.0).chain(sources) {
            let m = rule.moments(beta, j, (a, b));
            let margin = EDGE_FRACTION * (hi - lo);
            if m.peak < lo + margin || m.peak > hi - margin {
                return Err(Error::BoundaryDominated { j, q_peak: m.peak });
            }
            out.push(m);
        }
        Ok(out)
    };

    let mut panels = opts.initial_panels.max(1);
    let mut previous = evaluate(&Rule::new(&potential, lo, hi, panels, opts.order))?;
    let mut change;
    loop {
        panels *= 2;
        let current = evaluate(&Rule::new(&potential, lo, hi, panels, opts.order))?;
        change = previous
            .iter()
            .zip(&current)
            .map(|(p, c)| (p.log_z - c.log_z).abs() / c.log_z.abs().max(1.0))
            .fold(0.0, f64::max);
        previous = current;
        if change <= opts.tolerance {
            break;
        }
        if panels >= opts.max_panels {
            warn!("generating-function quadrature stopped at {panels} panels (relative change {change:.2e})");
            break;
        }
    }
    let log_z0 = previous[0].log_z;
    let rows = &previous[1..];
    let outside_mass = previous.iter().map(|r| r.outside).fold(0.0, f64::max);
    // the truncated tails carry at most about the edge value times a decay length
    let tail = previous.iter().map(|r| r.edge).fold(0.0, f64::max);
    if tail > 1e-10 {
        warn!("generating-function integrand is {tail:.1e} of its peak at the integration edge");
    }
    if outside_mass > opts.outside_warning {
        warn!(
            "{:.1}% of the generating-function integrand lies outside the sampled window [{a}, {b}]",
            100.0 * outside_mass
        );
    }
    let scale = previous.iter().map(|r| r.log_z.abs()).fold(1.0, f64::max);
    Ok(GeneratingFunction {
        beta,
        sources: sources.to_vec(),
        values: rows.iter().map(|r| (r.log_z - log_z0) / beta).collect(),
        slopes: rows.iter().map(|r| r.mean).collect(),
        outside_mass,
        quadrature_error: (2.0 * change.max(f64::EPSILON) * scale + tail) / beta,
        symmetric: ecp.symmetric,
    })
}

/// Step of the central differences used for oracle slopes.
const ORACLE_STEP: f64 = 1e-3;

/// `w(J)` from tilted eigensolves, slopes by fourth-order central differences.
pub fn generating_function_from_oracle(
    pot: &PotentialSpec,
    sys: &SystemParams,
    grid: &GridSpec,
    sources: &[f64],
) -> Result<GeneratingFunction> {
    let w = |j: f64| tilted_generating_function(pot, sys, grid, j);
    let w0 = w(0.0)?;
    let mut values = Vec::with_capacity(sources.len());
    let mut slopes = Vec::with_capacity(sources.len());
    let h = ORACLE_STEP;
    for &j in sources {
        values.push(w(j)? - w0);
        let d = (8.0 * (w(j + h)? - w(j - h)?) - (w(j + 2.0 * h)? - w(j - 2.0 * h)?)) / (12.0 * h);
        slopes.push(d);
    }
    Ok(GeneratingFunction {
        beta: sys.beta,
        sources: sources.to_vec(),
        values,
        slopes,
        outside_mass: 0.0,
        quadrature_error: 0.0,
        symmetric: pot.is_symmetric(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effpot::{integrate_to_ecp, uniform_grid, ForcePolynomial};

    #[test]
    fn harmonic_ecp_gives_quadratic_generating_function() {
        // m omega^2 = 2; window [-6, 6] holds the tilted Gaussians for |J| <= 3
        let force = ForcePolynomial::linear(2.0, 6.0);
        let ecp = integrate_to_ecp(&force, 1.5, 0.0, &uniform_grid(-6.0, 6.0, 13)).unwrap();
        let sources = uniform_grid(-3.0, 3.0, 13);
        let w =
            generating_function_from_ecp(&ecp, &sources, &QuadratureOptions::default()).unwrap();
        for ((j, v), s) in sources.iter().zip(&w.values).zip(&w.slopes) {
            assert!((v - j * j / 4.0).abs() < 1e-10, "J = {j}: {v}");
            assert!((s - j / 2.0).abs() < 1e-10);
        }
        assert!(w.second_differences().iter().all(|&d| d > 0.0));
        assert!(w.outside_mass < 1e-6);
    }

    #[test]
    fn peak_at_edge_is_refused() {
        let force = ForcePolynomial::linear(1.0, 1.0);
        let ecp = integrate_to_ecp(&force, 1.0, 0.0, &uniform_grid(-1.0, 1.0, 5)).unwrap();
        let r = generating_function_from_ecp(&ecp, &[5.0], &QuadratureOptions::default());
        assert!(matches!(r, Err(Error::BoundaryDominated { .. })));
    }

    #[test]
    fn classical_curve_required() {
        let force = ForcePolynomial::linear(1.0, 1.0);
        let mut ecp = integrate_to_ecp(&force, 1.0, 0.0, &uniform_grid(-1.0, 1.0, 5)).unwrap();
        ecp.force = None;
        let r = generating_function_from_ecp(&ecp, &[0.1], &QuadratureOptions::default());
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
