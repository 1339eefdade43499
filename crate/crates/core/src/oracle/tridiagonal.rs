//! Symmetric tridiagonal eigenproblems: Sturm-sequence bisection for
//! eigenvalues and inverse iteration for eigenvectors.

#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// Off-diagonal, length `n - 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x` (Sylvester inertia of `T - x`).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE * self.off.iter().fold(1.0_f64, |a, b| a.max(b * b));
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..self.diag.len() {
            d = if i == 0 {
                self.diag[0] - x
            } else {
                (self.diag[i] - x) - self.off[i - 1] * self.off[i - 1] / d
            };
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) to full working precision.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (lo, hi) = self.gershgorin();
        self.eigenvalue_in(k, lo, hi)
    }

    fn eigenvalue_in(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `count` smallest eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let (lo, hi) = self.gershgorin();
        let mut out: Vec<f64> = Vec::with_capacity(count);
        for k in 0..count.min(self.len()) {
            let start = out.last().copied().unwrap_or(lo);
            out.push(self.eigenvalue_in(k, start.min(hi), hi));
        }
        out
    }

    /// Eigenvector for an accurately known eigenvalue, unit Euclidean norm.
    /// `orthogonal_to` are previously found vectors of (nearly) degenerate states.
    pub fn eigenvector(&self, lambda: f64, orthogonal_to: &[&[f64]]) -> Vec<f64> {
        let n = self.len();
        let lu = ShiftedLu::factor(self, lambda);
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 0.7548776662466927).fract())
            .collect();
        for _ in 0..4 {
            lu.solve(&mut v);
            for u in orthogonal_to {
                let dot: f64 = v.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u.iter()).for_each(|(a, b)| *a -= dot * b);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// LU factorization of `T - shift` with partial pivoting (LAPACK gttrf layout).
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiagonal, shift: f64) -> Self {
        let n = t.len();
        let mut d: Vec<f64> = t.diag.iter().map(|x| x - shift).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        let scale = t.diag.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
        for x in d.iter_mut() {
            if x.abs() < f64::EPSILON * scale * 1e-3 {
                *x = f64::EPSILON * scale * 1e-3;
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        let vals = t.lowest_eigenvalues(5);
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn eigenvector_satisfies_equation() {
        let n = 40;
        let t = SymTridiagonal::new(
            (0..n)
                .map(|i| 2.0 + 0.1 * (i as f64 - 20.0).powi(2))
                .collect(),
            vec![-1.0; n - 1],
        );
        let lambda = t.eigenvalue(3);
        let v = t.eigenvector(lambda, &[]);
        for i in 0..n {
            let mut tv = t.diag[i] * v[i];
            if i > 0 {
                tv += t.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                tv += t.off[i] * v[i + 1];
            }
            assert!((tv - lambda * v[i]).abs() < 1e-10);
        }
    }
}
