//! Sampled correlation functions and discrete line spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    Exact,
    Canonical,
    ZeroTemperature,
    Cmd,
    Epac,
    Epac2,
    EpacZeroTemperature,
}

impl SeriesKind {
    pub fn label(self) -> &'static str {
        match self {
            SeriesKind::Exact => "exact",
            SeriesKind::Canonical => "canonical",
            SeriesKind::ZeroTemperature => "zero-temperature",
            SeriesKind::Cmd => "cmd",
            SeriesKind::Epac => "epac",
            SeriesKind::Epac2 => "epac2",
            SeriesKind::EpacZeroTemperature => "epac-zero-temperature",
        }
    }
}

/// `C(t)` on a time grid. `beta = None` means zero temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub kind: SeriesKind,
    pub beta: Option<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub stderr: Option<Vec<f64>>,
}

impl CorrelationSeries {
    pub fn new(
        kind: SeriesKind,
        beta: Option<f64>,
        times: Vec<f64>,
        values: Vec<Complex64>,
    ) -> Self {
        assert_eq!(
            times.len(),
            values.len(),
            "times and values differ in length"
        );
        Self {
            kind,
            beta,
            times,
            values,
            stderr: None,
        }
    }

    pub fn with_stderr(mut self, stderr: Vec<f64>) -> Self {
        assert_eq!(stderr.len(), self.values.len());
        self.stderr = Some(stderr);
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Time step of a uniform grid starting anywhere.
    pub fn uniform_step(&self) -> Result<f64> {
        uniform_step(&self.times)
    }
}

pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::NonuniformGrid);
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::NonuniformGrid);
    }
    let ok = times
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - (times[0] + i as f64 * dt)).abs() <= 1e-9 * dt.max(t.abs()));
    if ok {
        Ok(dt)
    } else {
        Err(Error::NonuniformGrid)
    }
}

/// `n` uniformly spaced times `0, dt, ..., (n-1) dt`.
pub fn time_grid(dt: f64, t_max: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize + 1;
    (0..n).map(|i| i as f64 * dt).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineKind {
    /// Lines of the standard correlation function `C(omega)`.
    Exact,
    /// Lines of the canonical (Kubo) correlation function.
    Canonical,
    /// Spectral function `rho(omega)`; weights may be negative.
    SpectralFunction,
    /// Lines of the closed-form approximate correlation function.
    Epac,
}

impl LineKind {
    pub fn label(self) -> &'static str {
        match self {
            LineKind::Exact => "exact",
            LineKind::Canonical => "canonical",
            LineKind::SpectralFunction => "spectral-function",
            LineKind::Epac => "epac",
        }
    }
}

/// One delta-function term `weight * delta(omega - frequency)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub frequency: f64,
    pub weight: f64,
}

/// Sum of delta functions; kept apart from continuous estimates on purpose.
///
/// Weights follow the convention `C(t) = (1/2pi) sum_l w_l exp(-i omega_l t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralLines {
    pub kind: LineKind,
    pub beta: Option<f64>,
    pub lines: Vec<SpectralLine>,
}

impl SpectralLines {
    /// Sorts by frequency and merges lines closer than `1e-11 (1 + |omega|)`.
    pub fn from_raw(kind: LineKind, beta: Option<f64>, mut raw: Vec<SpectralLine>) -> Self {
        raw.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        let mut lines: Vec<SpectralLine> = Vec::with_capacity(raw.len());
        let mut count = 0usize;
        for line in raw {
            match lines.last_mut() {
                Some(last)
                    if (line.frequency - last.frequency).abs()
                        <= 1e-11 * (1.0 + line.frequency.abs()) =>
                {
                    // running mean of the merged frequencies
                    count += 1;
                    last.frequency += (line.frequency - last.frequency) / count as f64;
                    last.weight += line.weight;
                }
                _ => {
                    count = 1;
                    lines.push(line);
                }
            }
        }
        Self { kind, beta, lines }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Drop lines with `|weight| < threshold`.
    pub fn pruned(mut self, threshold: f64) -> Self {
        self.lines.retain(|l| l.weight.abs() >= threshold);
        self
    }

    /// Line closest to `frequency`.
    pub fn nearest(&self, frequency: f64) -> Option<&SpectralLine> {
        self.lines.iter().min_by(|a, b| {
            (a.frequency - frequency)
                .abs()
                .total_cmp(&(b.frequency - frequency).abs())
        })
    }

    /// Line with the largest weight among `omega > 0`.
    pub fn dominant_positive(&self) -> Option<&SpectralLine> {
        self.lines
            .iter()
            .filter(|l| l.frequency > 0.0)
            .max_by(|a, b| a.weight.total_cmp(&b.weight))
    }

    /// `C(t) = (1/2pi) sum_l w_l exp(-i omega_l t)` on `times`.
    pub fn synthesize(&self, times: &[f64]) -> Vec<Complex64> {
        times
            .iter()
            .map(|&t| {
                self.lines
                    .iter()
                    .map(|l| Complex64::from_polar(l.weight, -l.frequency * t))
                    .sum::<Complex64>()
                    / (2.0 * std::f64::consts::PI)
            })
            .collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.lines.iter().map(|l| l.weight).sum()
    }
}
