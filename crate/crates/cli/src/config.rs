//! Run configuration: one TOML file with a flat section per pipeline stage.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use epac_core::cmd::{CorrelationOptions, SamplingOptions};
use epac_core::effpot::EffectivePotentialSettings;
use epac_core::oracle::GridSpec;
use epac_core::pimd::SamplerConfig;
use epac_core::{PotentialSpec, SystemParams};

use crate::error::CliError;

/// Run size presets; keys set explicitly in the config take precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 21 centroid points, 1e5 steps per point, 2000 CMD trajectories.
    #[default]
    Ci,
    /// 51 centroid points, 1e7 steps per point, 20000 CMD trajectories.
    Paper,
}

impl Scale {
    pub fn grid_points(self) -> usize {
        match self {
            Scale::Ci => 21,
            Scale::Paper => 51,
        }
    }

    pub fn production_steps(self) -> usize {
        match self {
            Scale::Ci => 100_000,
            Scale::Paper => 10_000_000,
        }
    }

    pub fn ensemble_size(self) -> usize {
        match self {
            Scale::Ci => 2_000,
            Scale::Paper => 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub scale: Scale,
}

fn default_seed() -> u64 {
    20_240_601
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("epac-out")
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            out_dir: default_out_dir(),
            scale: Scale::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// `V(q) = sum_k c_k q^k`.
    pub coefficients: Vec<f64>,
    pub mass: f64,
    #[serde(default)]
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub betas: Vec<f64>,
    #[serde(default = "unit")]
    pub hbar: f64,
    #[serde(default = "unit")]
    pub boltzmann: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
    /// Output time step and span of the exact correlation functions.
    pub dt: f64,
    pub t_max: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        let g = GridSpec::default_double_well();
        Self {
            q_min: g.q_min,
            q_max: g.q_max,
            n_points: g.n_points,
            dt: 0.05,
            t_max: 20.0,
        }
    }
}

/// Sampler keys; unset keys fall back to the scale preset or the sampler default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PimdSection {
    pub grid_points: Option<usize>,
    /// Centroid window `[lo, hi]`; unset picks the temperature-dependent default.
    pub window: Option<(f64, f64)>,
    pub trotter: Option<usize>,
    pub step_factor: Option<f64>,
    pub chain_length: Option<usize>,
    pub chain_substeps: Option<usize>,
    pub equilibration_steps: Option<usize>,
    pub production_steps: Option<usize>,
    pub sample_every: Option<usize>,
    pub drift_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegendreSection {
    /// Parametric bootstrap resamples of the force table.
    pub bootstrap_resamples: usize,
    /// Second differences may dip below zero by this many standard errors.
    pub convexity_sigma: f64,
}

impl Default for LegendreSection {
    fn default() -> Self {
        Self {
            bootstrap_resamples: 40,
            convexity_sigma: 3.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmdSection {
    pub ensemble_size: Option<usize>,
    pub sampling: SamplingOptions,
    pub correlation: CorrelationOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpacSection {
    /// Kinetic coefficient for the second-order form; unset skips it.
    pub z_beta: Option<f64>,
    pub dt: f64,
    pub t_max: f64,
}

impl Default for EpacSection {
    fn default() -> Self {
        Self {
            z_beta: None,
            dt: 0.05,
            t_max: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraSection {
    pub window: String,
    pub padding: usize,
    /// Peaks below this fraction of the largest value are dropped.
    pub peak_fraction: f64,
}

impl Default for SpectraSection {
    fn default() -> Self {
        Self {
            window: "hann".into(),
            padding: 4,
            peak_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Deviation threshold as a fraction of the reference at `t = 0`.
    pub threshold_fraction: f64,
    /// Upper end of the early-time window.
    pub early_time: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.1,
            early_time: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    pub potential: PotentialSection,
    pub system: SystemSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub pimd: PimdSection,
    #[serde(default)]
    pub effpot: EffectivePotentialSettings,
    #[serde(default)]
    pub legendre: LegendreSection,
    #[serde(default)]
    pub cmd: CmdSection,
    #[serde(default)]
    pub epac: EpacSection,
    #[serde(default)]
    pub spectra: SpectraSection,
    #[serde(default)]
    pub compare: CompareSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.potential()?;
        if self.system.betas.is_empty() {
            return Err(CliError::Config("system.betas is empty".into()));
        }
        for &b in &self.system.betas {
            self.system(b)?;
        }
        self.grid()?;
        epac_core::spectra::window_by_name(&self.spectra.window)
            .map_err(|e| CliError::Config(e.to_string()))?;
        epac_core::cmd::integrator_by_name(&self.cmd.correlation.integrator)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some((lo, hi)) = self.pimd.window {
            if !(lo < hi) {
                return Err(CliError::Config(format!(
                    "pimd.window must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Applies command-line overrides.
    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        out: Option<PathBuf>,
        scale: Option<Scale>,
    ) -> Self {
        if let Some(s) = seed {
            self.run.seed = s;
        }
        if let Some(o) = out {
            self.run.out_dir = o;
        }
        if let Some(s) = scale {
            self.run.scale = s;
        }
        self
    }

    pub fn potential(&self) -> Result<PotentialSpec, CliError> {
        let p = &self.potential;
        PotentialSpec::new(p.coefficients.clone(), p.mass, p.symmetric)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn system(&self, beta: f64) -> Result<SystemParams, CliError> {
        SystemParams::new(beta, self.system.hbar, self.system.boltzmann)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        let o = &self.oracle;
        GridSpec::new(o.q_min, o.q_max, o.n_points).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn grid_points(&self) -> usize {
        self.pimd
            .grid_points
            .unwrap_or(self.run.scale.grid_points())
    }

    pub fn ensemble_size(&self) -> usize {
        self.cmd
            .ensemble_size
            .unwrap_or(self.run.scale.ensemble_size())
    }

    pub fn sampler(&self) -> SamplerConfig {
        let p = &self.pimd;
        let d = SamplerConfig::default();
        SamplerConfig {
            trotter: p.trotter,
            step_factor: p.step_factor,
            chain_length: p.chain_length.unwrap_or(d.chain_length),
            chain_substeps: p.chain_substeps.unwrap_or(d.chain_substeps),
            equilibration_steps: p.equilibration_steps.unwrap_or(d.equilibration_steps),
            production_steps: p
                .production_steps
                .unwrap_or(self.run.scale.production_steps()),
            sample_every: p.sample_every.unwrap_or(d.sample_every),
            seed: self.run.seed,
            stream: 0,
            drift_tolerance: p.drift_tolerance.unwrap_or(d.drift_tolerance),
        }
    }

    /// Canonical TOML of the resolved configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Canonical form without the output location, which does not affect results.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.run.out_dir = PathBuf::new();
        c.canonical()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[potential]\ncoefficients = [0.0, 0.0, -0.5, 0.0, 0.1]\nmass = 1.0\nsymmetric = true\n\n[system]\nbetas = [1.0]\n";

    #[test]
    fn shipped_config_is_valid() {
        let cfg = RunConfig::from_toml(include_str!("../../../configs/double_well.toml")).unwrap();
        assert_eq!(cfg.system.betas, vec![1.0, 10.0]);
        assert_eq!(cfg.grid_points(), 21);
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.potential().unwrap(), PotentialSpec::double_well());
        assert_eq!(cfg.grid_points(), 21);
        assert_eq!(cfg.sampler().production_steps, 100_000);
        let paper = cfg
            .clone()
            .with_overrides(Some(3), None, Some(Scale::Paper));
        assert_eq!(paper.grid_points(), 51);
        assert_eq!(paper.sampler().production_steps, 10_000_000);
        assert_eq!(paper.sampler().seed, 3);
    }

    #[test]
    fn canonical_form_round_trips() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.canonical()).unwrap(), cfg);
    }

    #[test]
    fn missing_key_is_named() {
        let err =
            RunConfig::from_toml("[potential]\nmass = 1.0\n[system]\nbetas = [1.0]\n").unwrap_err();
        assert!(err.to_string().contains("coefficients"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::from_toml("[system]\nbetas = [1.0]\n").unwrap_err();
        assert!(err.to_string().contains("potential"), "{err}");
    }

    #[test]
    fn unknown_strategy_and_bad_potential_are_config_errors() {
        let text = format!("{MINIMAL}\n[spectra]\nwindow = \"gauss\"\n");
        assert!(RunConfig::from_toml(&text)
            .unwrap_err()
            .to_string()
            .contains("gauss"));
        let text = MINIMAL.replace("0.1]", "-0.1]");
        assert_eq!(RunConfig::from_toml(&text).unwrap_err().exit_code(), 2);
    }
}
