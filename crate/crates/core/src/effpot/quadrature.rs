//! Gauss–Legendre rules and Legendre-polynomial recurrences.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// `P_0(x) .. P_n(x)` written into `out` (length `n + 1`).
pub fn legendre_values(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = x;
    }
    for k in 1..n.saturating_sub(1) {
        out[k + 1] = ((2 * k + 1) as f64 * x * out[k] - k as f64 * out[k - 1]) / (k + 1) as f64;
    }
}

/// `P_0'(x) .. P_n'(x)` from `P'_{k+1} = P'_{k-1} + (2k + 1) P_k`.
pub fn legendre_derivatives(values: &[f64], out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 0.0;
    if n > 1 {
        out[1] = 1.0;
    }
    for k in 1..n.saturating_sub(1) {
        out[k + 1] = out[k - 1] + (2 * k + 1) as f64 * values[k];
    }
}

/// Antiderivatives `int_{-1}^{x} P_k`, `k = 0 .. n`, from `P_0 .. P_{n+1}`.
pub fn legendre_integrals(values: &[f64], out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = values[1] + 1.0;
    for k in 1..n {
        out[k] = (values[k + 1] - values[k - 1]) / (2 * k + 1) as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for k in 0..16 {
            let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k + 1) as f64
            };
            assert!((num - exact).abs() < 1e-14, "x^{k}");
        }
        let (x, _) = gauss_legendre(7);
        assert!(x[3].abs() < 1e-15);
    }

    #[test]
    fn recurrences_match_closed_forms() {
        let x = 0.37;
        let mut p = [0.0; 5];
        legendre_values(x, &mut p);
        assert!((p[2] - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
        assert!((p[3] - 0.5 * (5.0 * x * x * x - 3.0 * x)).abs() < 1e-15);
        let mut d = [0.0; 4];
        legendre_derivatives(&p, &mut d);
        assert!((d[3] - 0.5 * (15.0 * x * x - 3.0)).abs() < 1e-14);
        let mut i = [0.0; 4];
        legendre_integrals(&p, &mut i);
        // int_{-1}^{x} P_2 = (x^3 - x) / 2
        assert!((i[2] - 0.5 * (x * x * x - x)).abs() < 1e-15);
        assert!((i[0] - (x + 1.0)).abs() < 1e-15);
    }
}
