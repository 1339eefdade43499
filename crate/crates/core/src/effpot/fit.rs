//! Weighted least-squares polynomial model of the centroid mean force.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::quadrature::{legendre_derivatives, legendre_integrals, legendre_values};
use crate::error::{Error, Result};
use crate::pimd::ForceTable;

/// Condition number of the normal equations above which a fit is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// `F(q) = sum_k c_k P_k(q / scale)` with Legendre polynomials `P_k`.
///
/// The scaled variable keeps the basis well conditioned on the sampled
/// window; outside it the same series is used as an analytic extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcePolynomial {
    pub scale: f64,
    pub degree: usize,
    /// Only odd orders are fitted (antisymmetric force, even potential).
    pub odd_only: bool,
    /// Coefficient of `P_k` at index `k`; excluded orders hold zero.
    pub coefficients: Vec<f64>,
    /// Row-major `(degree + 1)^2` covariance of the coefficients.
    pub covariance: Vec<f64>,
    pub chi2_per_dof: f64,
    pub condition: f64,
    /// Range of centroid positions that carried data.
    pub window: (f64, f64),
}

impl ForcePolynomial {
    /// Exact odd-only model of a linear force `-k q` on `[-scale, scale]`.
    pub fn linear(stiffness: f64, scale: f64) -> Self {
        let mut coefficients = vec![0.0; 2];
        coefficients[1] = -stiffness * scale;
        Self {
            scale,
            degree: 1,
            odd_only: true,
            coefficients,
            covariance: vec![0.0; 4],
            chi2_per_dof: 0.0,
            condition: 1.0,
            window: (-scale, scale),
        }
    }

    fn basis_len(&self) -> usize {
        self.degree + 1
    }

    fn values(&self, q: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.basis_len() + 1];
        legendre_values(q / self.scale, &mut p);
        p
    }

    /// `(sum c_k P_k(x), sum c_k int_{-1}^{x} P_k)` by the three-term recurrence.
    fn series(&self, x: f64) -> (f64, f64) {
        let (mut prev, mut cur) = (0.0, 1.0);
        let (mut f, mut integral) = (0.0, 0.0);
        for (k, &c) in self.coefficients.iter().enumerate() {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
            if c != 0.0 {
                f += c * cur;
                integral += c * if k == 0 {
                    x + 1.0
                } else {
                    (next - prev) / (2.0 * kf + 1.0)
                };
            }
            prev = cur;
            cur = next;
        }
        (f, integral)
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.series(q / self.scale).0
    }

    /// `(F(q), -int_{anchor}^{q} F)` in one pass.
    pub fn eval_with_potential(&self, q: f64, anchor: f64) -> (f64, f64) {
        let (f, a) = self.series(q / self.scale);
        let (_, b) = self.series(anchor / self.scale);
        (f, -self.scale * (a - b))
    }

    /// `dF/dq`.
    pub fn derivative(&self, q: f64) -> f64 {
        let p = self.values(q);
        let mut d = vec![0.0; self.basis_len()];
        legendre_derivatives(&p, &mut d);
        self.coefficients
            .iter()
            .zip(&d)
            .map(|(c, d)| c * d)
            .sum::<f64>()
            / self.scale
    }

    /// Gradient of `-int_{anchor}^{q} F` with respect to the coefficients.
    fn potential_gradient(&self, q: f64, anchor: f64) -> Vec<f64> {
        let n = self.basis_len();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        legendre_integrals(&self.values(q), &mut a);
        legendre_integrals(&self.values(anchor), &mut b);
        a.iter()
            .zip(&b)
            .map(|(a, b)| -self.scale * (a - b))
            .collect()
    }

    /// `-int_{anchor}^{q} F(s) ds`, termwise.
    pub fn potential(&self, q: f64, anchor: f64) -> f64 {
        self.eval_with_potential(q, anchor).1
    }

    /// Standard error of [`Self::potential`] from the coefficient covariance.
    pub fn potential_stderr(&self, q: f64, anchor: f64) -> f64 {
        let g = self.potential_gradient(q, anchor);
        self.quadratic_form(&g).sqrt()
    }

    /// Standard error of [`Self::eval`].
    pub fn force_stderr(&self, q: f64) -> f64 {
        let mut p = self.values(q);
        p.truncate(self.basis_len());
        self.quadratic_form(&p).sqrt()
    }

    fn quadratic_form(&self, g: &[f64]) -> f64 {
        let n = self.basis_len();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[i] * self.covariance[i * n + j] * g[j];
            }
        }
        s.max(0.0)
    }
}

/// Weighted (1 / stderr^2) least-squares fit of the force table.
pub fn fit_force_polynomial(
    table: &ForceTable,
    degree: usize,
    odd_only: bool,
) -> Result<ForcePolynomial> {
    table.validate()?;
    let orders: Vec<usize> = (0..=degree).filter(|k| !odd_only || k % 2 == 1).collect();
    let n = table.len();
    if orders.is_empty() || orders.len() >= n {
        return Err(Error::InvalidParameter(format!(
            "degree {degree} needs more than {} grid points, table has {n}",
            orders.len()
        )));
    }
    let lo = table.q_c[0];
    let hi = table.q_c[n - 1];
    let scale = lo.abs().max(hi.abs());
    let mut design = DMatrix::<f64>::zeros(n, orders.len());
    let mut rhs = DVector::<f64>::zeros(n);
    let mut p = vec![0.0; degree + 1];
    for i in 0..n {
        legendre_values(table.q_c[i] / scale, &mut p);
        let w = 1.0 / table.stderr[i];
        for (col, &k) in orders.iter().enumerate() {
            design[(i, col)] = p[k] * w;
        }
        rhs[i] = table.force[i] * w;
    }
    let normal = design.transpose() * &design;
    // Jacobi scaling leaves the solution unchanged and isolates genuine degeneracy.
    let diag: Vec<f64> = (0..orders.len()).map(|i| normal[(i, i)].sqrt()).collect();
    let scaled = DMatrix::from_fn(orders.len(), orders.len(), |i, j| {
        normal[(i, j)] / (diag[i] * diag[j])
    });
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let chol = normal.clone().cholesky().ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let solution = chol.solve(&(design.transpose() * &rhs));
    let inverse = chol.inverse();
    let residual = &design * &solution - &rhs;
    let chi2 = residual.norm_squared();
    let dof = (n - orders.len()) as f64;

    let size = degree + 1;
    let mut coefficients = vec![0.0; size];
    let mut covariance = vec![0.0; size * size];
    for (a, &ka) in orders.iter().enumerate() {
        coefficients[ka] = solution[a];
        for (b, &kb) in orders.iter().enumerate() {
            covariance[ka * size + kb] = inverse[(a, b)];
        }
    }
    Ok(ForcePolynomial {
        scale,
        degree,
        odd_only,
        coefficients,
        covariance,
        chi2_per_dof: chi2 / dof,
        condition,
        window: (lo, hi),
    })
}
