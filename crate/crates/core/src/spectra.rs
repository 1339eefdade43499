//! Fourier analysis of correlation series, the Kubo factor that converts
//! canonical to standard spectra, and peak extraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{CorrelationSeries, LineKind, SpectralLine, SpectralLines};

/// `E(omega) = (x/2)(coth(x/2) + 1) = x / (1 - e^{-x})` with `x = beta hbar omega`.
pub fn kubo_factor(omega: f64, beta: f64, hbar: f64) -> f64 {
    let x = beta * hbar * omega;
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x + x * x / 12.0
    } else {
        x / -(-x).exp_m1()
    }
}

/// Multiplies canonical lines by `E(omega)`.
pub fn canonical_to_standard_lines(lines: &SpectralLines, beta: f64, hbar: f64) -> SpectralLines {
    let raw = lines
        .lines
        .iter()
        .map(|l| SpectralLine {
            frequency: l.frequency,
            weight: l.weight * kubo_factor(l.frequency, beta, hbar),
        })
        .collect();
    SpectralLines::from_raw(LineKind::Exact, Some(beta), raw)
}

/// Spectral function `rho(omega) = (1 - e^{-beta hbar omega}) C(omega)` from standard lines.
pub fn spectral_function_from_lines(lines: &SpectralLines, beta: f64, hbar: f64) -> SpectralLines {
    let raw = lines
        .lines
        .iter()
        .map(|l| SpectralLine {
            frequency: l.frequency,
            weight: -l.weight * (-beta * hbar * l.frequency).exp_m1(),
        })
        .filter(|l| l.weight != 0.0)
        .collect();
    SpectralLines::from_raw(LineKind::SpectralFunction, Some(beta), raw)
}

/// Taper applied to the symmetrized series before transforming.
pub trait Window: Send + Sync {
    fn name(&self) -> &'static str;

    /// Weight at `|t| <= span`.
    fn weight(&self, t: f64, span: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Rectangular;

impl Window for Rectangular {
    fn name(&self) -> &'static str {
        "rectangular"
    }

    fn weight(&self, _t: f64, _span: f64) -> f64 {
        1.0
    }
}

/// `cos^2(pi t / 2T)`, unity at `t = 0` and zero at the cutoff.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hann;

impl Window for Hann {
    fn name(&self) -> &'static str {
        "hann"
    }

    fn weight(&self, t: f64, span: f64) -> f64 {
        if span <= 0.0 {
            return 1.0;
        }
        0.5 * (1.0 + (PI * t / span).cos())
    }
}

/// Registered window names, default first.
pub const WINDOWS: [&str; 2] = ["hann", "rectangular"];

pub fn window_by_name(name: &str) -> Result<Box<dyn Window>> {
    match name {
        "hann" => Ok(Box::new(Hann)),
        "rectangular" => Ok(Box::new(Rectangular)),
        _ => Err(Error::UnknownStrategy {
            family: "window",
            name: name.to_string(),
            available: WINDOWS.join(", "),
        }),
    }
}

/// Continuous spectrum estimate on an ascending frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
    pub window: String,
    pub dt: f64,
    /// Largest `|t|` of the symmetrized input.
    pub span: f64,
    /// Transform length.
    pub n: usize,
    pub beta: Option<f64>,
}

impl SpectrumEstimate {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `2 pi / (n dt)`.
    pub fn bin_width(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dt)
    }

    /// `sum Re S(omega) d omega` over bins with `lo <= omega <= hi`.
    pub fn integrated_weight(&self, lo: f64, hi: f64) -> f64 {
        let d = self.bin_width();
        self.frequencies
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .map(|(_, s)| s.re * d)
            .sum()
    }
}

/// Zero padding: the transform length is at least this multiple of the symmetrized length.
pub const DEFAULT_PADDING: usize = 1;

/// `S(omega) = dt sum_k w(t_k) C(t_k) e^{i omega t_k}` over `t_k` in `[-T, T]`,
/// with `C(-t) = conj C(t)` filling the negative times of a one-sided series.
pub fn fourier_transform_series(
    series: &CorrelationSeries,
    window: &dyn Window,
) -> Result<SpectrumEstimate> {
    fourier_transform_padded(series, window, DEFAULT_PADDING)
}

pub fn fourier_transform_padded(
    series: &CorrelationSeries,
    window: &dyn Window,
    padding: usize,
) -> Result<SpectrumEstimate> {
    let dt = series.uniform_step()?;
    if series.times[0].abs() > 1e-9 * dt {
        return Err(Error::InvalidParameter(
            "one-sided series must start at t = 0".into(),
        ));
    }
    let n = series.len();
    let span = series.times[n - 1];
    let m = (2 * n - 1) * padding.max(1);
    let mut buffer = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        let c = series.values[k] * window.weight(series.times[k], span);
        buffer[k] = c;
        if k > 0 {
            buffer[m - k] = c.conj();
        }
    }
    // e^{+i omega t} is rustfft's inverse direction
    FftPlanner::<f64>::new()
        .plan_fft_inverse(m)
        .process(&mut buffer);
    let lowest = -(((m - 1) / 2) as i64);
    let d = 2.0 * PI / (m as f64 * dt);
    let mut frequencies = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    for index in lowest..lowest + m as i64 {
        frequencies.push(index as f64 * d);
        values.push(buffer[index.rem_euclid(m as i64) as usize] * dt);
    }
    Ok(SpectrumEstimate {
        frequencies,
        values,
        window: window.name().to_string(),
        dt,
        span,
        n: m,
        beta: series.beta,
    })
}

/// Multiplies a continuous canonical estimate by `E(omega)`.
pub fn canonical_to_standard(spec: &SpectrumEstimate, beta: f64, hbar: f64) -> SpectrumEstimate {
    let mut out = spec.clone();
    for (v, &w) in out.values.iter_mut().zip(&spec.frequencies) {
        *v *= kubo_factor(w, beta, hbar);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub frequency: f64,
    pub height: f64,
    /// Full width at half height, from linear interpolation between bins.
    pub width: f64,
}

/// Local maxima of `Re S` above `threshold`, refined by a parabola through
/// the three bins around each maximum; sorted by descending height.
pub fn extract_peaks(spec: &SpectrumEstimate, threshold: f64) -> Result<Vec<Peak>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(
            "peak threshold must be positive".into(),
        ));
    }
    let y: Vec<f64> = spec.values.iter().map(|v| v.re).collect();
    let x = &spec.frequencies;
    let d = spec.bin_width();
    let mut peaks = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > threshold) {
            continue;
        }
        let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
        let curvature = a - 2.0 * b + c;
        let (shift, height) = if curvature < 0.0 {
            let s = 0.5 * (a - c) / curvature;
            (s, b - 0.25 * (a - c) * s)
        } else {
            (0.0, b)
        };
        let half = 0.5 * height;
        let crossing = |step: isize| -> f64 {
            let mut j = i as isize;
            while j + step >= 0 && ((j + step) as usize) < y.len() && y[(j + step) as usize] > half
            {
                j += step;
            }
            let k = j + step;
            if k < 0 || k as usize >= y.len() {
                return x[j as usize];
            }
            let (y0, y1) = (y[j as usize], y[k as usize]);
            x[j as usize] + (x[k as usize] - x[j as usize]) * (y0 - half) / (y0 - y1)
        };
        peaks.push(Peak {
            frequency: x[i] + shift * d,
            height,
            width: crossing(1) - crossing(-1),
        });
    }
    peaks.sort_by(|p, q| q.height.total_cmp(&p.height));
    Ok(peaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{time_grid, SeriesKind};

    #[test]
    fn kubo_factor_limits_and_identity() {
        assert_eq!(kubo_factor(0.0, 1.0, 1.0), 1.0);
        assert!((kubo_factor(50.0, 2.0, 1.0) / 100.0 - 1.0).abs() < 1e-12);
        for w in [1e-9, 1e-3, 0.7, 3.0, 20.0] {
            let diff = kubo_factor(w, 1.3, 1.0) - kubo_factor(-w, 1.3, 1.0);
            assert!((diff - 1.3 * w).abs() < 1e-12 * (1.0 + w));
        }
    }

    #[test]
    fn cosine_transform_has_one_peak_per_sign() {
        let times = time_grid(0.05, 200.0);
        let values = times
            .iter()
            .map(|t| Complex64::new(2.0 * (1.3 * t).cos(), 0.0))
            .collect();
        let s = CorrelationSeries::new(SeriesKind::Exact, None, times, values);
        let spec = fourier_transform_series(&s, &Hann).unwrap();
        let top = spec.values.iter().map(|v| v.re).fold(0.0, f64::max);
        let peaks = extract_peaks(&spec, 0.1 * top).unwrap();
        assert_eq!(peaks.len(), 2);
        for p in &peaks {
            assert!((p.frequency.abs() - 1.3).abs() < 0.5 * spec.bin_width());
        }
        let w = spec.integrated_weight(0.5 * spec.bin_width(), f64::INFINITY);
        assert!((w / (2.0 * PI) - 1.0).abs() < 0.02, "{w}");
        for (a, b) in spec.values.iter().zip(spec.values.iter().rev()) {
            assert!((a - b.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn flat_spectrum_has_no_peaks() {
        let times = time_grid(0.1, 10.0);
        let mut values = vec![Complex64::new(0.0, 0.0); times.len()];
        values[0] = Complex64::new(1.0, 0.0);
        let s = CorrelationSeries::new(SeriesKind::Exact, None, times, values);
        let spec = fourier_transform_series(&s, &Rectangular).unwrap();
        assert!(spec.values.iter().all(|v| (v.re - 0.1).abs() < 1e-12));
        assert!(extract_peaks(&spec, 1e-3).unwrap().is_empty());
    }

    #[test]
    fn registry_round_trips() {
        for name in WINDOWS {
            assert_eq!(window_by_name(name).unwrap().name(), name);
        }
        assert!(window_by_name("gauss").is_err());
    }
}
