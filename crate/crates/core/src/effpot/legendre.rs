//! Numerical Legendre transform between `w(J)` and `V(Q)`, and the curvature
//! of the standard effective potential at its minimum.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{Anchor, CurveKind, EffectivePotentialCurve, GeneratingFunction};
use crate::error::{Error, Result};

/// Default half-width (in grid points) of the curvature fit.
pub const CURVATURE_WINDOW: usize = 5;

/// Curvatures below this are treated as flat.
const FLAT_CURVATURE: f64 = 1e-10;

/// Cubic Hermite interpolant through tabulated values and slopes.
fn hermite(x: &[f64], f: &[f64], df: &[f64], t: f64) -> f64 {
    let k = match x.partition_point(|&xi| xi <= t) {
        0 => 0,
        p if p >= x.len() => x.len() - 2,
        p => p - 1,
    };
    let h = x[k + 1] - x[k];
    let s = (t - x[k]) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * f[k]
        + (s3 - 2.0 * s2 + s) * h * df[k]
        + (-2.0 * s3 + 3.0 * s2) * f[k + 1]
        + (s3 - s2) * h * df[k + 1]
}

/// Derivative of [`hermite`].
fn hermite_slope(x: &[f64], f: &[f64], df: &[f64], t: f64) -> f64 {
    let k = match x.partition_point(|&xi| xi <= t) {
        0 => 0,
        p if p >= x.len() => x.len() - 2,
        p => p - 1,
    };
    let h = x[k + 1] - x[k];
    let s = (t - x[k]) / h;
    let s2 = s * s;
    ((6.0 * s2 - 6.0 * s) * f[k] + (-6.0 * s2 + 6.0 * s) * f[k + 1]) / h
        + (3.0 * s2 - 4.0 * s + 1.0) * df[k]
        + (3.0 * s2 - 2.0 * s) * df[k + 1]
}

/// `sup_x (y x - f(x))` for each `y`: grid supremum refined by golden section
/// on the Hermite interpolant. Returns `(values, maximizers)`.
fn conjugate(x: &[f64], f: &[f64], df: &[f64], ys: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() < 3 || x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "Legendre transform needs an ascending grid of at least three points".into(),
        ));
    }
    let n = x.len();
    let mut values = Vec::with_capacity(ys.len());
    let mut argmax = Vec::with_capacity(ys.len());
    for &y in ys {
        let (mut best, mut top) = (0, f64::NEG_INFINITY);
        for i in 0..n {
            let g = y * x[i] - f[i];
            if g > top {
                top = g;
                best = i;
            }
        }
        if best == 0 || best == n - 1 {
            return Err(Error::SupremumAtEdge { q: y });
        }
        let objective = |t: f64| y * t - hermite(x, f, df, t);
        let (lo, hi) = (x[best - 1], x[best + 1]);
        let gradient = |t: f64| y - hermite_slope(x, f, df, t);
        // a bracketed stationary point is located to rounding by bisection;
        // otherwise golden section on the unimodal objective
        let t = if gradient(lo) > 0.0 && gradient(hi) < 0.0 {
            bisect_decreasing(gradient, lo, hi)
        } else {
            golden_section_max(objective, lo, hi).0
        };
        let g = objective(t);
        let (t, g) = if g >= top { (t, g) } else { (x[best], top) };
        values.push(g);
        argmax.push(t);
    }
    Ok((values, argmax))
}

fn bisect_decreasing(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// `V(Q) = sup_J { J Q - w(J) }` on `q_grid`. With `w(0) = 0` the minimum of
/// the result is zero.
pub fn legendre_transform(
    w: &GeneratingFunction,
    q_grid: &[f64],
) -> Result<EffectivePotentialCurve> {
    let (values, sources) = conjugate(&w.sources, &w.values, &w.slopes, q_grid)?;
    Ok(EffectivePotentialCurve {
        kind: CurveKind::Standard,
        beta: w.beta,
        abscissae: q_grid.to_vec(),
        values,
        slopes: sources,
        stderr: vec![0.0; q_grid.len()],
        force: None,
        anchor: Anchor::ZeroAtMinimum,
        symmetric: w.symmetric,
    })
}

/// `w(J) = sup_Q { J Q - V(Q) }` for a standard curve.
pub fn inverse_legendre_transform(
    curve: &EffectivePotentialCurve,
    sources: &[f64],
) -> Result<GeneratingFunction> {
    let (values, slopes) = conjugate(&curve.abscissae, &curve.values, &curve.slopes, sources)?;
    Ok(GeneratingFunction {
        beta: curve.beta,
        sources: sources.to_vec(),
        values,
        slopes,
        outside_mass: 0.0,
        quadrature_error: 0.0,
        symmetric: curve.symmetric,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub omega: f64,
    pub q_min: f64,
    /// `d^2 V / dQ^2` at the minimum.
    pub curvature: f64,
    /// Largest change of `omega` when the fit window shrinks or grows by two points.
    pub window_spread: f64,
}

/// Effective frequency from a local quadratic fit over `CURVATURE_WINDOW`
/// points on each side of the discrete minimum.
pub fn effective_frequency(
    curve: &EffectivePotentialCurve,
    mass: f64,
) -> Result<FrequencyEstimate> {
    effective_frequency_with_window(curve, mass, CURVATURE_WINDOW)
}

pub fn effective_frequency_with_window(
    curve: &EffectivePotentialCurve,
    mass: f64,
    half_window: usize,
) -> Result<FrequencyEstimate> {
    let n = curve.len();
    let i = curve
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidParameter("empty curve".into()))?;
    if half_window < 1 || i < half_window || i + half_window >= n {
        return Err(Error::MinimumAtEdge { index: i });
    }
    let x = &curve.abscissae;
    let v = &curve.values;
    let q_min = if curve.symmetric {
        0.0
    } else {
        let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
        let denom = a - 2.0 * b + c;
        let h = 0.5 * (x[i + 1] - x[i - 1]);
        if denom > 0.0 {
            x[i] + 0.5 * h * (a - c) / denom
        } else {
            x[i]
        }
    };
    let curvature = quadratic_curvature(x, v, i, half_window);
    if !(curvature > FLAT_CURVATURE) {
        return Err(Error::FlatCurvature { curvature });
    }
    let omega = (curvature / mass).sqrt();
    let mut window_spread: f64 = 0.0;
    for w in [half_window.saturating_sub(2), half_window + 2] {
        if w >= 1 && i >= w && i + w < n {
            let c = quadratic_curvature(x, v, i, w);
            if c > 0.0 {
                window_spread = window_spread.max(((c / mass).sqrt() - omega).abs());
            }
        }
    }
    Ok(FrequencyEstimate {
        omega,
        q_min,
        curvature,
        window_spread,
    })
}

/// Second derivative from a least-squares parabola over `i - w ..= i + w`.
fn quadratic_curvature(x: &[f64], v: &[f64], i: usize, w: usize) -> f64 {
    let mut a = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for k in i - w..=i + w {
        let d = x[k] - x[i];
        let row = Vector3::new(1.0, d, d * d);
        a += row * row.transpose();
        rhs += row * (v[k] - v[i]);
    }
    match a.lu().solve(&rhs) {
        Some(c) => 2.0 * c[2],
        None => f64::NAN,
    }
}
