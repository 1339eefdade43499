//! Centroid molecular dynamics: thermostatted sampling of initial centroids on
//! the effective classical potential, then microcanonical trajectories that
//! give the centroid correlation function.

mod integrator;

pub use integrator::{integrator_by_name, Integrator, VelocityVerlet, Yoshida4, INTEGRATORS};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::effpot::quadrature::gauss_legendre;
use crate::effpot::{CurveKind, EffectivePotentialCurve, ForcePolynomial};
use crate::error::{Error, Result};
use crate::model::{PotentialSpec, SystemParams};
use crate::pimd::ThermostatChains;
use crate::series::{CorrelationSeries, SeriesKind};
use crate::stats::{mean, mean_and_stderr, Estimate};

/// Potential and force seen by the centroid.
pub trait CentroidField: Sync {
    fn force(&self, q: f64) -> f64;
    fn energy(&self, q: f64) -> f64;
}

impl CentroidField for ForcePolynomial {
    fn force(&self, q: f64) -> f64 {
        self.eval(q)
    }

    fn energy(&self, q: f64) -> f64 {
        self.potential(q, 0.0)
    }
}

impl CentroidField for PotentialSpec {
    fn force(&self, q: f64) -> f64 {
        self.eval_force(q)
    }

    fn energy(&self, q: f64) -> f64 {
        self.eval_potential(q)
    }
}

fn classical_force(ecp: &EffectivePotentialCurve) -> Result<&ForcePolynomial> {
    if ecp.kind != CurveKind::Classical {
        return Err(Error::InvalidParameter(
            "centroid dynamics needs a classical curve".into(),
        ));
    }
    ecp.force
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("classical curve carries no fitted force".into()))
}

fn curve_window(ecp: &EffectivePotentialCurve) -> (f64, f64) {
    (ecp.abscissae[0], ecp.abscissae[ecp.len() - 1])
}

/// Points used to scan for the stiffest curvature.
const CURVATURE_SCAN: usize = 401;

/// `sqrt(max |F'| / m)` over `[lo, hi]` by central differences.
pub fn max_frequency(field: &dyn CentroidField, mass: f64, lo: f64, hi: f64) -> f64 {
    let h = 1e-4 * (hi - lo);
    let mut k: f64 = 0.0;
    for i in 0..CURVATURE_SCAN {
        let q = lo + (hi - lo) * i as f64 / (CURVATURE_SCAN - 1) as f64;
        k = k.max(((field.force(q + h) - field.force(q - h)) / (2.0 * h)).abs());
    }
    (k / mass).sqrt()
}

/// `<g>` under `e^{-beta V}` on `[lo, hi]` (composite Gauss–Legendre, 64 panels of 10).
pub fn boltzmann_average(
    field: &dyn CentroidField,
    beta: f64,
    lo: f64,
    hi: f64,
    g: impl Fn(f64) -> f64,
) -> f64 {
    let (x, w) = gauss_legendre(10);
    let panels = 64;
    let width = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * x.len());
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(&w) {
            let q = mid + 0.5 * width * xi;
            nodes.push((q, 0.5 * width * wi, -beta * field.energy(q)));
        }
    }
    let top = nodes.iter().map(|n| n.2).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut zg) = (0.0, 0.0);
    for (q, wt, e) in nodes {
        let b = wt * (e - top).exp();
        z += b;
        zg += b * g(q);
    }
    zg / z
}

/// Initial centroid phase-space points drawn from `e^{-beta [p^2/2m + V^c(q)]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidEnsemble {
    pub beta: f64,
    pub mass: f64,
    pub seed: u64,
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
}

impl CentroidEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `<p^2 / m>`, equal to `1 / beta` in equilibrium.
    pub fn kinetic_temperature(&self) -> Estimate {
        let x: Vec<f64> = self.momenta.iter().map(|p| p * p / self.mass).collect();
        mean_and_stderr(&x)
    }

    pub fn mean_position(&self) -> Estimate {
        mean_and_stderr(&self.positions)
    }

    pub fn second_moment(&self) -> Estimate {
        let x: Vec<f64> = self.positions.iter().map(|q| q * q).collect();
        mean_and_stderr(&x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingOptions {
    /// Independent thermostatted walkers advanced together.
    pub walkers: usize,
    /// Time step in units of `1 / omega_max` of the potential window.
    pub step_factor: f64,
    pub equilibration_steps: usize,
    /// Steps between successive draws from one walker.
    pub stride: usize,
    pub chain_length: usize,
    pub chain_substeps: usize,
    /// Relative drift of the extended energy (per `kT` and walker) that aborts sampling.
    pub drift_tolerance: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            walkers: 32,
            step_factor: 0.05,
            equilibration_steps: 20_000,
            stride: 200,
            chain_length: 4,
            chain_substeps: 4,
            drift_tolerance: 1e-2,
        }
    }
}

/// Draws `n` centroids for the fitted force of a classical curve.
pub fn sample_initial_centroids(
    ecp: &EffectivePotentialCurve,
    sys: &SystemParams,
    mass: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<CentroidEnsemble> {
    let force = classical_force(ecp)?;
    sample_centroids(force, curve_window(ecp), sys, mass, n, seed, opts)
}

/// Thermostatted walkers on `field` supply positions every `stride` steps;
/// momenta are drawn exactly from the Maxwell distribution.
pub fn sample_centroids(
    field: &dyn CentroidField,
    window: (f64, f64),
    sys: &SystemParams,
    mass: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<CentroidEnsemble> {
    if opts.walkers == 0 || opts.stride == 0 || !(opts.step_factor > 0.0) {
        return Err(Error::InvalidParameter(
            "sampling needs walkers, stride and a positive step".into(),
        ));
    }
    let kt = sys.thermal_energy();
    let beta = 1.0 / kt;
    let mut ensemble = CentroidEnsemble {
        beta,
        mass,
        seed,
        positions: Vec::with_capacity(n),
        momenta: Vec::with_capacity(n),
    };
    if n == 0 {
        return Ok(ensemble);
    }
    let (lo, hi) = window;
    let dt = opts.step_factor / max_frequency(field, mass, lo, hi);
    // chain frequency matched to the thermal width of the distribution
    let q2 = boltzmann_average(field, beta, lo, hi, |q| q * q)
        - boltzmann_average(field, beta, lo, hi, |q| q).powi(2);
    let omega = 1.0 / (beta * mass * q2).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = opts.walkers;
    let mut q: Vec<f64> = (0..w)
        .map(|_| lo + (hi - lo) * (0.25 + 0.5 * rng.random::<f64>()))
        .collect();
    let mut p: Vec<f64> = (0..w)
        .map(|_| (mass * kt).sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut f: Vec<f64> = q.iter().map(|&x| field.force(x)).collect();
    let masses = vec![mass; w];
    let mut chains = ThermostatChains::new(
        w,
        opts.chain_length,
        kt,
        omega,
        opts.chain_substeps,
        &mut rng,
    );
    let step = |q: &mut [f64], p: &mut [f64], f: &mut [f64], chains: &mut ThermostatChains| {
        chains.half_step(p, &masses, dt);
        for i in 0..w {
            p[i] += 0.5 * dt * f[i];
            q[i] += dt * p[i] / mass;
            f[i] = field.force(q[i]);
            p[i] += 0.5 * dt * f[i];
        }
        chains.half_step(p, &masses, dt);
    };
    let extended = |q: &[f64], p: &[f64], chains: &ThermostatChains| -> f64 {
        q.iter()
            .zip(p)
            .map(|(q, p)| 0.5 * p * p / mass + field.energy(*q))
            .sum::<f64>()
            + chains.energy()
    };
    for _ in 0..opts.equilibration_steps {
        step(&mut q, &mut p, &mut f, &mut chains);
    }
    let rounds = n.div_ceil(w);
    let mut energies = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        for _ in 0..opts.stride {
            step(&mut q, &mut p, &mut f, &mut chains);
        }
        let e = extended(&q, &p, &chains);
        if !e.is_finite() {
            return Err(Error::ThermostatDivergence {
                drift: f64::INFINITY,
                q_c: None,
            });
        }
        energies.push(e);
        for &x in q.iter().take(n - ensemble.positions.len()) {
            ensemble.positions.push(x);
        }
    }
    let window = (rounds / 10).max(1);
    let drift =
        (mean(&energies[rounds - window..]) - mean(&energies[..window])).abs() / (w as f64 * kt);
    if drift > opts.drift_tolerance {
        return Err(Error::ThermostatDivergence { drift, q_c: None });
    }
    for _ in 0..n {
        ensemble
            .momenta
            .push((mass * kt).sqrt() * rng.sample::<f64, _>(StandardNormal));
    }
    Ok(ensemble)
}

/// Microcanonical trajectory sampled every `record_every` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    /// Largest `|E(t) - E(0)|` relative to `|p0^2/2m| + |V(q0)|`.
    pub energy_drift: f64,
}

/// Relative energy error allowed along a trajectory.
pub const ENERGY_TOLERANCE: f64 = 1e-6;

/// Integrates `m q'' = F(q)` from `start = (q, p)`; negative `dt` runs backwards.
#[allow(clippy::too_many_arguments)]
pub fn propagate_centroid(
    field: &dyn CentroidField,
    integrator: &dyn Integrator,
    mass: f64,
    start: (f64, f64),
    dt: f64,
    n_steps: usize,
    record_every: usize,
    tolerance: f64,
) -> Result<Trajectory> {
    let record_every = record_every.max(1);
    let (mut q, mut p) = start;
    let mut f = field.force(q);
    let e0 = 0.5 * p * p / mass + field.energy(q);
    let scale = (0.5 * p * p / mass + field.energy(q).abs()).max(f64::MIN_POSITIVE);
    let mut traj = Trajectory {
        times: vec![0.0],
        positions: vec![q],
        momenta: vec![p],
        energy_drift: 0.0,
    };
    for i in 1..=n_steps {
        integrator.step(field, mass, dt, &mut q, &mut p, &mut f);
        if i % record_every == 0 {
            let e = 0.5 * p * p / mass + field.energy(q);
            traj.energy_drift = traj.energy_drift.max((e - e0).abs() / scale);
            traj.times.push(i as f64 * dt);
            traj.positions.push(q);
            traj.momenta.push(p);
        }
    }
    if !(traj.energy_drift <= tolerance) {
        return Err(Error::EnergyDrift {
            drift: traj.energy_drift,
            tolerance,
        });
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Correlation points are written every this many steps.
    pub output_every: usize,
    /// Ensemble batches for the standard error.
    pub batches: usize,
    pub integrator: String,
    pub energy_tolerance: f64,
    /// Time origins per trajectory, `origin_spacing` apart.
    pub time_origins: usize,
    pub origin_spacing: f64,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        Self {
            dt: 0.005,
            t_max: 20.0,
            output_every: 10,
            batches: 20,
            integrator: INTEGRATORS[0].to_string(),
            energy_tolerance: ENERGY_TOLERANCE,
            time_origins: 1,
            origin_spacing: 5.0,
        }
    }
}

/// Largest allowed `dt * omega_max`.
pub const MAX_STEP_PHASE: f64 = 0.05;

/// `C^c(t) = <q_c(t) q_c(0)>` over the ensemble for the fitted force of `ecp`.
pub fn centroid_correlation(
    ensemble: &CentroidEnsemble,
    ecp: &EffectivePotentialCurve,
    opts: &CorrelationOptions,
) -> Result<CorrelationSeries> {
    let force = classical_force(ecp)?;
    centroid_correlation_on(ensemble, force, curve_window(ecp), opts)
}

/// As [`centroid_correlation`] for any centroid field; `window` bounds the
/// stiffness check.
pub fn centroid_correlation_on(
    ensemble: &CentroidEnsemble,
    field: &dyn CentroidField,
    window: (f64, f64),
    opts: &CorrelationOptions,
) -> Result<CorrelationSeries> {
    let integrator = integrator_by_name(&opts.integrator)?;
    let mass = ensemble.mass;
    let omega_max = max_frequency(field, mass, window.0, window.1);
    if !(opts.dt > 0.0) || opts.dt * omega_max > MAX_STEP_PHASE {
        return Err(Error::InvalidParameter(format!(
            "dt = {} does not resolve the stiffest curvature (need dt <= {:.3e})",
            opts.dt,
            MAX_STEP_PHASE / omega_max
        )));
    }
    if opts.output_every == 0 || opts.batches == 0 || opts.time_origins == 0 {
        return Err(Error::InvalidParameter(
            "output_every, batches and time_origins must be positive".into(),
        ));
    }
    let stride = opts.output_every;
    let points = (opts.t_max / (opts.dt * stride as f64)).round() as usize + 1;
    let origin_gap = ((opts.origin_spacing / (opts.dt * stride as f64)).round() as usize).max(1);
    let recorded = points + (opts.time_origins - 1) * origin_gap;
    let n_steps = (recorded - 1) * stride;
    let n = ensemble.len();
    let batches = opts.batches.min(n.max(1));
    let mut batch_sums = vec![vec![0.0; points]; batches];
    let mut batch_counts = vec![0usize; batches];
    for i in 0..n {
        let traj = propagate_centroid(
            field,
            integrator.as_ref(),
            mass,
            (ensemble.positions[i], ensemble.momenta[i]),
            opts.dt,
            n_steps,
            stride,
            opts.energy_tolerance,
        )?;
        let b = i * batches / n;
        for o in 0..opts.time_origins {
            let start = o * origin_gap;
            let q0 = traj.positions[start];
            for (k, s) in batch_sums[b].iter_mut().enumerate() {
                *s += q0 * traj.positions[start + k];
            }
        }
        batch_counts[b] += opts.time_origins;
    }
    let times: Vec<f64> = (0..points).map(|k| (k * stride) as f64 * opts.dt).collect();
    let total: usize = batch_counts.iter().sum();
    let mut values = Vec::with_capacity(points);
    let mut stderr = Vec::with_capacity(points);
    for k in 0..points {
        let sum: f64 = batch_sums.iter().map(|s| s[k]).sum();
        values.push(Complex64::new(
            if total > 0 { sum / total as f64 } else { 0.0 },
            0.0,
        ));
        let means: Vec<f64> = batch_sums
            .iter()
            .zip(&batch_counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s[k] / c as f64)
            .collect();
        stderr.push(if means.len() > 1 {
            mean_and_stderr(&means).stderr
        } else {
            0.0
        });
    }
    Ok(
        CorrelationSeries::new(SeriesKind::Cmd, Some(ensemble.beta), times, values)
            .with_stderr(stderr),
    )
}
