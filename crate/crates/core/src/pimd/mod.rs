//! Normal-mode path-integral molecular dynamics with Nosé–Hoover chains.
//!
//! Constrained runs freeze the zero (centroid) mode and return the mean force
//! on the centroid; unconstrained runs propagate every mode and estimate the
//! centroid second moment. Fictitious mode masses are chosen so that every
//! propagated mode oscillates near `Omega = 2 pi / (beta hbar)`.

mod normal_modes;
mod thermostat;

pub use normal_modes::NormalModes;
pub use thermostat::ThermostatChains;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PotentialSpec, SystemParams};
use crate::stats::{blocking, Estimate};

/// `sum_j [ m P / (2 beta^2 hbar^2) (q_j - q_{j+1})^2 + V(q_j) / P ]`, cyclic.
pub fn quasiparticle_potential(pot: &PotentialSpec, sys: &SystemParams, beads: &[f64]) -> f64 {
    let p = beads.len();
    let stiffness = spring_prefactor(pot, sys, p);
    (0..p)
        .map(|j| {
            let d = beads[j] - beads[(j + 1) % p];
            stiffness * d * d + pot.eval_potential(beads[j]) / p as f64
        })
        .sum()
}

/// `m P / (2 beta^2 hbar^2)`.
fn spring_prefactor(pot: &PotentialSpec, sys: &SystemParams, p: usize) -> f64 {
    pot.mass() * p as f64 / (2.0 * sys.beta_hbar().powi(2))
}

/// Default Trotter number by inverse temperature.
pub fn default_trotter_number(beta: f64) -> usize {
    if beta <= 0.3 {
        8
    } else if beta <= 3.0 {
        32
    } else if beta <= 30.0 {
        64
    } else {
        128
    }
}

/// `0.1` up to `P = 64`, then shrinking as `P^{-1/2}`: with more beads the
/// extended-energy drift at a fixed step grows past the abort threshold.
pub fn default_step_factor(p: usize) -> f64 {
    0.1 * (64.0 / p as f64).sqrt().min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Trotter number `P`; `None` picks [`default_trotter_number`].
    pub trotter: Option<usize>,
    /// MD step in units of `1 / Omega`, `Omega = 2 pi / (beta hbar)`;
    /// `None` picks [`default_step_factor`].
    pub step_factor: Option<f64>,
    pub chain_length: usize,
    /// Multiple-time-step subdivisions of each thermostat half step.
    pub chain_substeps: usize,
    pub equilibration_steps: usize,
    pub production_steps: usize,
    /// Record an observable every this many steps.
    pub sample_every: usize,
    pub seed: u64,
    /// RNG stream; grid runs use the point index.
    pub stream: u64,
    /// Relative drift of the extended-system energy that aborts a run.
    pub drift_tolerance: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            trotter: None,
            step_factor: None,
            chain_length: 4,
            chain_substeps: 4,
            equilibration_steps: 10_000,
            production_steps: 200_000,
            sample_every: 1,
            seed: 20_240_601,
            stream: 0,
            drift_tolerance: 1e-2,
        }
    }
}

impl SamplerConfig {
    pub fn trotter_number(&self, beta: f64) -> usize {
        self.trotter.unwrap_or_else(|| default_trotter_number(beta))
    }

    pub fn step_factor(&self, beta: f64) -> f64 {
        self.step_factor
            .unwrap_or_else(|| default_step_factor(self.trotter_number(beta)))
    }

    fn validate(&self, beta: f64) -> Result<()> {
        let p = self.trotter_number(beta);
        let step_factor = self.step_factor(beta);
        if p < 2 {
            return Err(Error::InvalidParameter(format!(
                "Trotter number must be >= 2, got {p}"
            )));
        }
        if !(step_factor > 0.0 && step_factor < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "step_factor must lie in (0, 2), got {step_factor}"
            )));
        }
        if self.chain_length < 2 {
            return Err(Error::InvalidParameter("chain_length must be >= 2".into()));
        }
        if self.chain_substeps == 0 {
            return Err(Error::InvalidParameter(
                "chain_substeps must be >= 1".into(),
            ));
        }
        if self.sample_every == 0 || self.production_steps < self.sample_every * 64 {
            return Err(Error::InvalidParameter(
                "production_steps must cover at least 64 samples".into(),
            ));
        }
        Ok(())
    }
}

/// Ring polymer in normal-mode coordinates with one chain per propagated mode.
#[derive(Debug, Clone)]
pub struct PathState {
    modes: NormalModes,
    /// Mode coordinates `u_k`.
    pub positions: Vec<f64>,
    /// Momenta conjugate to `u_k`.
    pub momenta: Vec<f64>,
    /// Bead positions `q_j = (T u)_j`, kept in sync with `positions`.
    pub beads: Vec<f64>,
    masses: Vec<f64>,
    stiffness: Vec<f64>,
    /// One chain per propagated mode.
    chains: ThermostatChains,
    forces: Vec<f64>,
    bead_forces: Vec<f64>,
    /// First mode that is propagated (1 when the centroid is frozen).
    first: usize,
    kt: f64,
}

impl PathState {
    pub fn centroid(&self) -> f64 {
        self.beads.iter().sum::<f64>() / self.beads.len() as f64
    }

    pub fn trotter_number(&self) -> usize {
        self.beads.len()
    }

    /// `-(1/P) sum_j V'(q_j)`, the instantaneous centroid-force estimator.
    pub fn centroid_force(&self) -> f64 {
        self.bead_forces.iter().sum()
    }

    /// Extended-system energy conserved by the thermostatted dynamics.
    pub fn conserved_energy(&self, pot: &PotentialSpec) -> f64 {
        let p = self.beads.len() as f64;
        let mut e = 0.0;
        for k in self.first..self.positions.len() {
            e += 0.5 * self.momenta[k].powi(2) / self.masses[k];
            e += 0.5 * self.stiffness[k] * self.positions[k].powi(2);
        }
        e += self
            .beads
            .iter()
            .map(|&q| pot.eval_potential(q))
            .sum::<f64>()
            / p;
        e += self.chains.energy();
        e
    }

    fn update_forces(&mut self, pot: &PotentialSpec) {
        let p = self.beads.len() as f64;
        self.modes.to_beads_into(&self.positions, &mut self.beads);
        for (f, &q) in self.bead_forces.iter_mut().zip(&self.beads) {
            *f = pot.eval_force(q) / p;
        }
        self.modes
            .to_modes_into(&self.bead_forces, &mut self.forces);
        for k in 0..self.forces.len() {
            self.forces[k] -= self.stiffness[k] * self.positions[k];
        }
    }

    fn thermostat_half(&mut self, dt: f64) {
        let first = self.first;
        self.chains
            .half_step(&mut self.momenta[first..], &self.masses[first..], dt);
    }

    /// One velocity-Verlet step wrapped in chain half-steps.
    fn step(&mut self, pot: &PotentialSpec, dt: f64) {
        self.thermostat_half(dt);
        for k in self.first..self.positions.len() {
            self.momenta[k] += 0.5 * dt * self.forces[k];
            self.positions[k] += dt * self.momenta[k] / self.masses[k];
        }
        self.update_forces(pot);
        for k in self.first..self.positions.len() {
            self.momenta[k] += 0.5 * dt * self.forces[k];
        }
        self.thermostat_half(dt);
    }

    fn degrees_of_freedom(&self) -> usize {
        self.positions.len() - self.first
    }
}

/// Sampler for one `(potential, temperature, P)` setting.
struct Sampler<'a> {
    pot: &'a PotentialSpec,
    sys: &'a SystemParams,
    cfg: &'a SamplerConfig,
    p: usize,
    omega: f64,
    dt: f64,
}

impl<'a> Sampler<'a> {
    fn new(pot: &'a PotentialSpec, sys: &'a SystemParams, cfg: &'a SamplerConfig) -> Result<Self> {
        cfg.validate(sys.beta)?;
        let p = cfg.trotter_number(sys.beta);
        let omega = 2.0 * std::f64::consts::PI / sys.beta_hbar();
        Ok(Self {
            pot,
            sys,
            cfg,
            p,
            omega,
            dt: cfg.step_factor(sys.beta) / omega,
        })
    }

    /// Curvature scale of `V / P` used to precondition mode masses.
    fn curvature_scale(&self, q_c: f64) -> f64 {
        let mut c = self.pot.second_derivative(q_c).abs();
        if let Ok(minima) = self.pot.classical_minima() {
            for q in minima {
                c = c.max(self.pot.second_derivative(q).abs());
            }
        }
        c.max(1e-3 * self.pot.mass() * self.omega * self.omega / self.p as f64) / self.p as f64
    }

    fn initial_state(&self, q_c: f64, constrained: bool, rng: &mut ChaCha8Rng) -> PathState {
        let p = self.p;
        let modes = NormalModes::new(p);
        let kt = self.sys.thermal_energy();
        let prefactor = spring_prefactor(self.pot, self.sys, p);
        let stiffness: Vec<f64> = modes
            .eigenvalues()
            .iter()
            .map(|l| 2.0 * prefactor * l)
            .collect();
        let c = self.curvature_scale(q_c);
        let masses: Vec<f64> = stiffness
            .iter()
            .map(|k| (k + c) / self.omega.powi(2))
            .collect();
        let first = usize::from(constrained);
        let mut positions = vec![0.0; p];
        positions[0] = (p as f64).sqrt() * q_c;
        let mut momenta = vec![0.0; p];
        for k in first..p {
            momenta[k] = (masses[k] * kt).sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        let chains = ThermostatChains::new(
            p - first,
            self.cfg.chain_length,
            kt,
            self.omega,
            self.cfg.chain_substeps,
            rng,
        );
        let mut state = PathState {
            beads: vec![q_c; p],
            modes,
            positions,
            momenta,
            masses,
            stiffness,
            chains,
            forces: vec![0.0; p],
            bead_forces: vec![0.0; p],
            first,
            kt,
        };
        state.update_forces(self.pot);
        state
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(self.cfg.stream);
        rng
    }

    /// Equilibrates, then records `observe(state)` every `sample_every` steps.
    fn run<F>(&self, state: &mut PathState, mut observe: F) -> Result<RunDiagnostics>
    where
        F: FnMut(&PathState),
    {
        let energy_scale = state.degrees_of_freedom() as f64 * state.kt;
        let check = |state: &PathState| -> Result<f64> {
            let e = state.conserved_energy(self.pot);
            if e.is_finite() {
                Ok(e)
            } else {
                Err(Error::ThermostatDivergence {
                    drift: f64::INFINITY,
                    q_c: None,
                })
            }
        };
        for _ in 0..self.cfg.equilibration_steps {
            state.step(self.pot, self.dt);
        }
        check(state)?;
        let n_samples = self.cfg.production_steps / self.cfg.sample_every;
        let mut energies = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            for _ in 0..self.cfg.sample_every {
                state.step(self.pot, self.dt);
            }
            energies.push(check(state)?);
            observe(state);
        }
        let window = (n_samples / 10).max(1);
        let head = energies[..window].iter().sum::<f64>() / window as f64;
        let tail = energies[n_samples - window..].iter().sum::<f64>() / window as f64;
        let drift = (tail - head).abs() / energy_scale;
        if drift > self.cfg.drift_tolerance {
            return Err(Error::ThermostatDivergence { drift, q_c: None });
        }
        Ok(RunDiagnostics { drift, n_samples })
    }
}

struct RunDiagnostics {
    drift: f64,
    n_samples: usize,
}

/// Mean centroid force at one constrained centroid position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceSample {
    pub q_c: f64,
    pub force: Estimate,
    pub n_samples: usize,
    /// Relative drift of the extended-system energy over production.
    pub drift: f64,
    /// Largest `|centroid - q_c|` seen during production.
    pub constraint_error: f64,
}

/// Relative floor keeping standard errors positive when the estimator has no
/// variance (e.g. purely harmonic potentials).
const STDERR_FLOOR: f64 = 1e-12;

/// Constrained run at fixed centroid `q_c`; the centroid mode is never propagated.
pub fn sample_constrained(
    pot: &PotentialSpec,
    sys: &SystemParams,
    q_c: f64,
    cfg: &SamplerConfig,
) -> Result<ForceSample> {
    let sampler = Sampler::new(pot, sys, cfg)?;
    let mut rng = sampler.rng();
    let mut state = sampler.initial_state(q_c, true, &mut rng);
    let mut forces = Vec::with_capacity(cfg.production_steps / cfg.sample_every);
    let mut constraint_error: f64 = 0.0;
    let diag = sampler
        .run(&mut state, |s| {
            forces.push(s.centroid_force());
            constraint_error = constraint_error.max((s.centroid() - q_c).abs());
        })
        .map_err(|e| e.at_centroid(q_c))?;
    let b = blocking(&forces);
    let stderr = b.stderr.max(STDERR_FLOOR * (1.0 + b.mean.abs()));
    Ok(ForceSample {
        q_c,
        force: Estimate::new(b.mean, stderr),
        n_samples: diag.n_samples,
        drift: diag.drift,
        constraint_error,
    })
}

/// Mean centroid forces on a grid of centroid positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceTable {
    pub beta: f64,
    pub trotter: usize,
    pub seed: u64,
    pub q_c: Vec<f64>,
    pub force: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: Vec<usize>,
}

impl ForceTable {
    pub fn len(&self) -> usize {
        self.q_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_c.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.q_c.len();
        if self.force.len() != n || self.stderr.len() != n || self.n_samples.len() != n {
            return Err(Error::InvalidParameter(
                "force table columns differ in length".into(),
            ));
        }
        if self.q_c.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "force table grid must be strictly ascending".into(),
            ));
        }
        if self.stderr.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParameter(
                "force table standard errors must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Smallest half-width of the default centroid window.
pub const MIN_WINDOW_HALF_WIDTH: f64 = 3.0;

/// Boltzmann exponent `beta (V(L) - V_min)` the default window must reach at its edges.
pub const WINDOW_EXPONENT: f64 = 25.0;

/// Symmetric centroid window `[-L, L]`, `L` the smallest multiple of 0.5 (at
/// least [`MIN_WINDOW_HALF_WIDTH`]) where the bare Boltzmann factor has fallen
/// by `e^{-25}` relative to the potential minimum.
pub fn default_centroid_window(pot: &PotentialSpec, sys: &SystemParams) -> (f64, f64) {
    let v_min = pot
        .classical_minima()
        .ok()
        .filter(|m| !m.is_empty())
        .map(|m| {
            m.iter()
                .map(|&q| pot.eval_potential(q))
                .fold(f64::INFINITY, f64::min)
        })
        .unwrap_or_else(|| pot.eval_potential(0.0));
    let beta = 1.0 / sys.thermal_energy();
    let mut half = MIN_WINDOW_HALF_WIDTH;
    while half < 1e3 {
        let edge = pot.eval_potential(half).min(pot.eval_potential(-half));
        if beta * (edge - v_min) >= WINDOW_EXPONENT {
            break;
        }
        half += 0.5;
    }
    (-half, half)
}

/// `n` equally spaced centroid positions on `[lo, hi]`.
pub fn centroid_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Independent constrained runs, one RNG stream per grid index.
pub fn centroid_force_grid(
    pot: &PotentialSpec,
    sys: &SystemParams,
    grid: &[f64],
    cfg: &SamplerConfig,
) -> Result<ForceTable> {
    centroid_force_grid_with(pot, sys, grid, cfg, |_, _| {})
}

/// As [`centroid_force_grid`], reporting each finished point to `progress`.
pub fn centroid_force_grid_with<F>(
    pot: &PotentialSpec,
    sys: &SystemParams,
    grid: &[f64],
    cfg: &SamplerConfig,
    mut progress: F,
) -> Result<ForceTable>
where
    F: FnMut(usize, &ForceSample),
{
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "centroid grid must be strictly ascending".into(),
        ));
    }
    let mut table = ForceTable {
        beta: sys.beta,
        trotter: cfg.trotter_number(sys.beta),
        seed: cfg.seed,
        q_c: Vec::with_capacity(grid.len()),
        force: Vec::with_capacity(grid.len()),
        stderr: Vec::with_capacity(grid.len()),
        n_samples: Vec::with_capacity(grid.len()),
    };
    for (i, &q_c) in grid.iter().enumerate() {
        let point_cfg = SamplerConfig {
            stream: i as u64,
            ..cfg.clone()
        };
        let sample = sample_constrained(pot, sys, q_c, &point_cfg)?;
        progress(i, &sample);
        table.q_c.push(q_c);
        table.force.push(sample.force.mean);
        table.stderr.push(sample.force.stderr);
        table.n_samples.push(sample.n_samples);
    }
    Ok(table)
}

/// Second moments from an unconstrained run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSample {
    /// `<q_c^2>`, the centroid second moment.
    pub centroid_q2: Estimate,
    /// `<q_j^2>` averaged over beads.
    pub bead_q2: Estimate,
    pub n_samples: usize,
    pub drift: f64,
}

/// Unconstrained run with every mode propagated and thermostatted.
pub fn centroid_variance_estimate(
    pot: &PotentialSpec,
    sys: &SystemParams,
    cfg: &SamplerConfig,
) -> Result<VarianceSample> {
    let sampler = Sampler::new(pot, sys, cfg)?;
    let mut rng = sampler.rng();
    let start = pot
        .classical_minima()
        .ok()
        .and_then(|m| m.first().copied())
        .unwrap_or(0.0);
    let mut state = sampler.initial_state(start, false, &mut rng);
    let n = cfg.production_steps / cfg.sample_every;
    let mut centroid = Vec::with_capacity(n);
    let mut beads = Vec::with_capacity(n);
    let diag = sampler.run(&mut state, |s| {
        centroid.push(s.centroid().powi(2));
        beads.push(s.beads.iter().map(|q| q * q).sum::<f64>() / s.beads.len() as f64);
    })?;
    Ok(VarianceSample {
        centroid_q2: blocking(&centroid).estimate(),
        bead_q2: blocking(&beads).estimate(),
        n_samples: diag.n_samples,
        drift: diag.drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quasiparticle_potential_limits() {
        let dw = PotentialSpec::double_well();
        let sys = SystemParams::natural(2.0);
        let q = 0.8;
        assert!((quasiparticle_potential(&dw, &sys, &[q; 6]) - dw.eval_potential(q)).abs() < 1e-14);
        let (a, b) = (0.3, -0.5);
        let want = (2.0 / (2.0 * 4.0)) * 2.0 * (a - b) * (a - b)
            + (dw.eval_potential(a) + dw.eval_potential(b)) / 2.0;
        assert!((quasiparticle_potential(&dw, &sys, &[a, b]) - want).abs() < 1e-14);
    }

    #[test]
    fn quasiparticle_potential_matches_naive_loop() {
        let dw = PotentialSpec::double_well();
        let sys = SystemParams::natural(1.0);
        let beads: [f64; 8] = [0.3, -1.2, 0.8, 1.9, -0.4, 0.05, 1.1, -2.0];
        let p = beads.len();
        let mut naive = 0.0;
        for j in 0..p {
            let next = if j + 1 == p { beads[0] } else { beads[j + 1] };
            naive += (p as f64 / 2.0) * (beads[j] - next).powi(2);
            naive += dw.eval_potential(beads[j]) / p as f64;
        }
        assert!((quasiparticle_potential(&dw, &sys, &beads) - naive).abs() < 1e-12);
    }

    #[test]
    fn mode_force_is_gradient_of_quasiparticle_potential() {
        let dw = PotentialSpec::double_well();
        let sys = SystemParams::natural(3.0);
        let cfg = SamplerConfig {
            trotter: Some(8),
            ..Default::default()
        };
        let sampler = Sampler::new(&dw, &sys, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut state = sampler.initial_state(0.4, false, &mut rng);
        state.positions = vec![1.1, 0.2, -0.3, 0.5, 0.1, -0.2, 0.4, 0.05];
        state.update_forces(&dw);
        let phi = |u: &[f64]| quasiparticle_potential(&dw, &sys, &state.modes.to_beads(u));
        for k in 0..8 {
            let h = 1e-6;
            let mut up = state.positions.clone();
            let mut dn = state.positions.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = -(phi(&up) - phi(&dn)) / (2.0 * h);
            assert!(
                (state.forces[k] - fd).abs() < 1e-6,
                "mode {k}: {} vs {fd}",
                state.forces[k]
            );
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SamplerConfig {
            trotter: Some(1),
            ..Default::default()
        };
        let r = sample_constrained(
            &PotentialSpec::double_well(),
            &SystemParams::natural(1.0),
            0.0,
            &cfg,
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
