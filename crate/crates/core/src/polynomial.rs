//! Dense monomial polynomials `sum_k c[k] x^k`.

/// Horner evaluation.
pub fn eval(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn derivative(coefficients: &[f64]) -> Vec<f64> {
    coefficients
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Strip trailing zero coefficients.
pub fn trimmed(coefficients: &[f64]) -> &[f64] {
    let len = coefficients
        .iter()
        .rposition(|&c| c != 0.0)
        .map_or(0, |i| i + 1);
    &coefficients[..len]
}

/// All distinct real roots in ascending order.
///
/// Roots of `p` are isolated by the critical points of `p` (roots of `p'`,
/// found recursively) and the Cauchy bound; each bracket with a sign change
/// is refined by bisection. Critical points where `p` vanishes are kept as
/// (multiple) roots.
pub fn real_roots(coefficients: &[f64]) -> Vec<f64> {
    let p = trimmed(coefficients);
    match p.len() {
        0 | 1 => return Vec::new(),
        2 => return vec![-p[0] / p[1]],
        _ => {}
    }
    let lead = p[p.len() - 1];
    let bound = 1.0
        + p[..p.len() - 1]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max);

    let critical = real_roots(&derivative(p));
    let mut knots = Vec::with_capacity(critical.len() + 2);
    knots.push(-bound);
    knots.extend(critical.iter().copied().filter(|c| c.abs() < bound));
    knots.push(bound);

    let scale = p.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let vanishes = |x: f64| {
        let mag = p
            .iter()
            .enumerate()
            .map(|(k, c)| (c * x.powi(k as i32)).abs())
            .sum::<f64>()
            .max(scale);
        eval(p, x).abs() <= 1e-13 * mag
    };

    let mut roots: Vec<f64> = Vec::new();
    let push = |r: f64, roots: &mut Vec<f64>| {
        if roots
            .last()
            .map_or(true, |&last| (r - last).abs() > 1e-12 * (1.0 + r.abs()))
        {
            roots.push(r);
        }
    };
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if vanishes(a) && a > -bound {
            push(a, &mut roots);
        }
        let (fa, fb) = (eval(p, a), eval(p, b));
        if fa * fb < 0.0 {
            push(bisect(p, a, b, fa), &mut roots);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
    roots
}

fn bisect(p: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = eval(p, mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}
