//! Error bars for correlated time series (blocking analysis) and small helpers.

use serde::{Deserialize, Serialize};

/// Mean with standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(mean: f64, stderr: f64) -> Self {
        Self { mean, stderr }
    }

    /// `|self - value| <= k * stderr`.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

/// Result of a blocking (renormalization-group) error analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockingAnalysis {
    pub mean: f64,
    pub stderr: f64,
    /// Number of pairwise blocking transformations at the chosen level.
    pub level: usize,
    /// False when no plateau was detected; `stderr` is then the largest
    /// estimate over levels with enough blocks.
    pub plateau: bool,
    /// `(stderr estimate, its uncertainty)` per level.
    pub levels: Vec<(f64, f64)>,
}

impl BlockingAnalysis {
    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.mean, self.stderr)
    }
}

const MIN_BLOCKS: usize = 32;

/// Flyvbjerg-Petersen blocking with automatic plateau detection.
///
/// At each level neighbouring samples are averaged pairwise; the naive
/// standard error grows until blocks are longer than the correlation time.
/// The chosen level is the first one (with at least 32 blocks) whose next
/// two levels do not exceed it by more than its own uncertainty.
pub fn blocking(samples: &[f64]) -> BlockingAnalysis {
    let n = samples.len();
    let mean = if n == 0 {
        f64::NAN
    } else {
        samples.iter().sum::<f64>() / n as f64
    };
    let mut data = samples.to_vec();
    let mut levels = Vec::new();
    while data.len() >= 2 {
        let m = data.len();
        let mu = data.iter().sum::<f64>() / m as f64;
        let var = data.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (m - 1) as f64;
        let se = (var / m as f64).sqrt();
        levels.push((se, se / (2.0 * (m - 1) as f64).sqrt()));
        data = data.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    }
    let usable = levels
        .iter()
        .enumerate()
        .take_while(|(k, _)| n >> k >= MIN_BLOCKS)
        .count();
    if usable == 0 {
        let se = levels.first().map_or(f64::NAN, |l| l.0);
        return BlockingAnalysis {
            mean,
            stderr: se,
            level: 0,
            plateau: false,
            levels,
        };
    }
    for k in 0..usable {
        let (se, err) = levels[k];
        let next_ok = (k + 1..(k + 3).min(usable)).all(|j| levels[j].0 <= se + err);
        if next_ok && k + 1 < usable {
            return BlockingAnalysis {
                mean,
                stderr: se,
                level: k,
                plateau: true,
                levels,
            };
        }
    }
    let (level, &(se, _)) = levels[..usable]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("at least one usable level");
    BlockingAnalysis {
        mean,
        stderr: se,
        level,
        plateau: false,
        levels,
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and standard error of the mean for independent samples.
pub fn mean_and_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mu = mean(xs);
    let var = xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0);
    Estimate::new(mu, (var / n).sqrt())
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Ordinary least-squares line `y = a + b x`; returns `(a, b, stderr_b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - a - b * xi).powi(2))
        .sum();
    let se_b = if n > 2.0 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (a, b, se_b)
}

/// Weighted least-squares slope through the origin; returns `(slope, stderr)`.
pub fn weighted_slope_through_origin(x: &[f64], y: &[f64], sigma: &[f64]) -> (f64, f64) {
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((xi, yi), si) in x.iter().zip(y).zip(sigma) {
        let w = 1.0 / (si * si);
        sxx += w * xi * xi;
        sxy += w * xi * yi;
    }
    (sxy / sxx, (1.0 / sxx).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                let e: f64 = rng.sample(StandardNormal);
                x = phi * x + e;
                x
            })
            .collect()
    }

    #[test]
    fn white_noise_plateau_at_level_zero() {
        let xs = ar1(1 << 16, 0.0, 1);
        let b = blocking(&xs);
        assert!(b.plateau);
        let naive = mean_and_stderr(&xs).stderr;
        assert!((b.stderr / naive - 1.0).abs() < 0.1);
    }

    #[test]
    fn correlated_series_matches_ar1_theory() {
        // AR(1): var of mean -> sigma^2/(1-phi)^2 / n with sigma^2 = 1
        let phi = 0.9;
        let n = 1 << 18;
        let xs = ar1(n, phi, 7);
        let b = blocking(&xs);
        let theory = (1.0 / ((1.0 - phi) * (1.0 - phi)) / n as f64).sqrt();
        assert!(
            (b.stderr / theory - 1.0).abs() < 0.25,
            "blocking {} vs theory {}",
            b.stderr,
            theory
        );
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v).collect();
        let (a, b, se) = linear_fit(&x, &y);
        assert!((a - 2.0).abs() < 1e-12 && (b + 3.0).abs() < 1e-12 && se < 1e-12);
    }
}
