//! Force table to effective frequency in one call, with parametric bootstrap
//! errors, and the eigensolver route to the same standard curve.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    effective_frequency_with_window, fit_force_polynomial, generating_function_from_ecp,
    generating_function_from_oracle, integrate_to_ecp, legendre_transform, uniform_grid,
    EffectivePotentialCurve, ForcePolynomial, FrequencyEstimate, GeneratingFunction,
    QuadratureOptions, CURVATURE_WINDOW,
};
use crate::error::{Error, Result};
use crate::model::{PotentialSpec, SystemParams};
use crate::oracle::GridSpec;
use crate::pimd::ForceTable;
use crate::stats::{mean, std_dev, Estimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectivePotentialSettings {
    /// Highest Legendre order of the force fit.
    pub degree: usize,
    /// Fit only odd orders (symmetric potentials).
    pub odd_only: bool,
    /// Source grid `[j_min, j_max]` with `j_points` points; widened on demand.
    pub j_min: f64,
    pub j_max: f64,
    pub j_points: usize,
    /// Standard-curve grid.
    pub q_min: f64,
    pub q_max: f64,
    pub q_points: usize,
    /// Points of the tabulated classical curve across the sampled window.
    pub ecp_points: usize,
    pub quadrature: QuadratureOptions,
    pub curvature_window: usize,
    /// How many times the source grid may be widened by half its span.
    pub max_source_extensions: usize,
}

impl Default for EffectivePotentialSettings {
    fn default() -> Self {
        Self {
            degree: 15,
            odd_only: true,
            j_min: -3.0,
            j_max: 3.0,
            j_points: 81,
            q_min: -1.5,
            q_max: 1.5,
            q_points: 301,
            ecp_points: 201,
            quadrature: QuadratureOptions::default(),
            curvature_window: CURVATURE_WINDOW,
            max_source_extensions: 4,
        }
    }
}

impl EffectivePotentialSettings {
    pub fn q_grid(&self) -> Vec<f64> {
        uniform_grid(self.q_min, self.q_max, self.q_points)
    }

    fn source_grid(&self, widen: usize) -> Vec<f64> {
        let factor = 1.5f64.powi(widen as i32);
        let centre = 0.5 * (self.j_min + self.j_max);
        let half = 0.5 * (self.j_max - self.j_min) * factor;
        let points = ((self.j_points - 1) as f64 * factor).round() as usize + 1;
        uniform_grid(centre - half, centre + half, points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivePotentialResult {
    pub force: ForcePolynomial,
    pub classical: EffectivePotentialCurve,
    pub generating: GeneratingFunction,
    pub standard: EffectivePotentialCurve,
    pub frequency: FrequencyEstimate,
}

/// Standard curve from a generating-function builder, widening the source
/// grid while the supremum for some `Q` sits on its edge.
fn standard_with_extension<F>(
    settings: &EffectivePotentialSettings,
    mut build: F,
) -> Result<(GeneratingFunction, EffectivePotentialCurve)>
where
    F: FnMut(&[f64]) -> Result<GeneratingFunction>,
{
    let q_grid = settings.q_grid();
    let mut widen = 0;
    loop {
        let sources = settings.source_grid(widen);
        let w = build(&sources)?;
        match legendre_transform(&w, &q_grid) {
            Ok(curve) => return Ok((w, curve)),
            Err(Error::SupremumAtEdge { q }) if widen < settings.max_source_extensions => {
                debug!("supremum at the source-grid edge for Q = {q}; widening");
                widen += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Fit, integrate, generating function, Legendre transform and curvature.
pub fn run_effective_potential(
    table: &ForceTable,
    mass: f64,
    settings: &EffectivePotentialSettings,
) -> Result<EffectivePotentialResult> {
    let force = fit_force_polynomial(table, settings.degree, settings.odd_only)?;
    let grid = uniform_grid(force.window.0, force.window.1, settings.ecp_points);
    let classical = integrate_to_ecp(&force, table.beta, 0.0, &grid)?;
    let (generating, mut standard) = standard_with_extension(settings, |s| {
        generating_function_from_ecp(&classical, s, &settings.quadrature)
    })?;
    standard.stderr = vec![generating.quadrature_error; standard.len()];
    let frequency = effective_frequency_with_window(&standard, mass, settings.curvature_window)?;
    Ok(EffectivePotentialResult {
        force,
        classical,
        generating,
        standard,
        frequency,
    })
}

/// Spread of pipeline outputs over resampled force tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub omega: Estimate,
    /// Standard deviation of the standard curve at each `Q`.
    pub standard_stderr: Vec<f64>,
    /// Standard deviation of the standard curve's second differences.
    pub second_difference_stderr: Vec<f64>,
    /// Standard deviation of the classical curve at each tabulated point.
    pub classical_stderr: Vec<f64>,
    pub resamples: usize,
    pub failures: usize,
}

/// Parametric bootstrap: each resample perturbs every force by its standard
/// error and reruns the pipeline; failed resamples are counted and skipped.
pub fn bootstrap_standard_curve(
    table: &ForceTable,
    mass: f64,
    settings: &EffectivePotentialSettings,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omegas = Vec::with_capacity(resamples);
    let mut standard: Vec<Vec<f64>> = Vec::with_capacity(resamples);
    let mut curvature: Vec<Vec<f64>> = Vec::with_capacity(resamples);
    let mut classical: Vec<Vec<f64>> = Vec::with_capacity(resamples);
    let mut failures = 0;
    for _ in 0..resamples {
        let mut t = table.clone();
        for (f, s) in t.force.iter_mut().zip(&table.stderr) {
            *f += s * rng.sample::<f64, _>(StandardNormal);
        }
        match run_effective_potential(&t, mass, settings) {
            Ok(r) => {
                omegas.push(r.frequency.omega);
                curvature.push(r.standard.second_differences());
                standard.push(r.standard.values);
                classical.push(r.classical.values);
            }
            Err(e) => {
                debug!("bootstrap resample failed: {e}");
                failures += 1;
            }
        }
    }
    if omegas.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least two successful resamples, got {}",
            omegas.len()
        )));
    }
    let column_sd = |rows: &[Vec<f64>]| -> Vec<f64> {
        (0..rows[0].len())
            .map(|i| std_dev(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
            .collect()
    };
    Ok(BootstrapSummary {
        omega: Estimate::new(mean(&omegas), std_dev(&omegas)),
        standard_stderr: column_sd(&standard),
        second_difference_stderr: column_sd(&curvature),
        classical_stderr: column_sd(&classical),
        resamples: omegas.len(),
        failures,
    })
}

/// Standard curve and frequency from tilted eigensolves instead of sampling.
pub fn oracle_standard_curve(
    pot: &PotentialSpec,
    sys: &SystemParams,
    grid: &GridSpec,
    settings: &EffectivePotentialSettings,
) -> Result<(
    GeneratingFunction,
    EffectivePotentialCurve,
    FrequencyEstimate,
)> {
    let (w, curve) = standard_with_extension(settings, |s| {
        generating_function_from_oracle(pot, sys, grid, s)
    })?;
    let f = effective_frequency_with_window(&curve, pot.mass(), settings.curvature_window)?;
    Ok((w, curve, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic_table(stiffness: f64, sigma: f64) -> ForceTable {
        let q = uniform_grid(-7.5, 7.5, 21);
        ForceTable {
            beta: 1.0,
            trotter: 32,
            seed: 0,
            force: q.iter().map(|x| -stiffness * x).collect(),
            stderr: vec![sigma; q.len()],
            n_samples: vec![1; q.len()],
            q_c: q,
        }
    }

    #[test]
    fn harmonic_table_gives_unit_frequency() {
        let table = harmonic_table(1.0, 1e-3);
        let settings = EffectivePotentialSettings {
            degree: 3,
            ..Default::default()
        };
        let r = run_effective_potential(&table, 1.0, &settings).unwrap();
        assert!((r.frequency.omega - 1.0).abs() < 1e-6, "{:?}", r.frequency);
        assert_eq!(r.frequency.q_min, 0.0);
        assert!(r.standard.is_convex(0.0));
        for (q, v) in r.standard.abscissae.iter().zip(&r.standard.values) {
            assert!((v - q * q / 2.0).abs() < 1e-8);
        }
        let b = bootstrap_standard_curve(&table, 1.0, &settings, 20, 5).unwrap();
        assert_eq!(b.failures, 0);
        assert!(b.omega.stderr > 0.0 && b.omega.stderr < 1e-2);
    }

    #[test]
    fn source_grid_widens_when_needed() {
        // Q = 1.5 on a stiff spring needs J = 6, beyond the default source grid
        let table = harmonic_table(4.0, 1e-3);
        let settings = EffectivePotentialSettings {
            degree: 1,
            ..Default::default()
        };
        let r = run_effective_potential(&table, 1.0, &settings).unwrap();
        assert!(r.generating.sources.last().unwrap() > &6.0);
        assert!((r.frequency.omega - 2.0).abs() < 1e-6);
    }
}
