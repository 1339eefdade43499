//! Pipeline stages. Each reads only the files written by earlier stages under
//! `out_dir/beta_<beta>/` and records what it read and wrote in a manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use epac_core::cmd::{centroid_correlation, sample_initial_centroids};
use epac_core::effpot::{
    bootstrap_standard_curve, convexity_tolerance, fit_force_polynomial, integrate_to_ecp,
    run_effective_potential, uniform_grid, EffectivePotentialCurve,
};
use epac_core::epac::{epac_spectral_function, epac_spectrum, EpacParameters};
use epac_core::io::{
    read_curve, read_force_table, read_json, read_series, sha256_file, sidecar_path, write_curve,
    write_force_table, write_json, write_lines, write_series, write_spectrum,
};
use epac_core::oracle::{
    canonical_spectrum, exact_spectrum, required_states, solve_eigensystem, EigenSystem,
};
use epac_core::pimd::{
    centroid_force_grid_with, centroid_grid, default_centroid_window, ForceTable, SamplerConfig,
};
use epac_core::registry::{CorrelationInputs, MethodRegistry};
use epac_core::series::time_grid;
use epac_core::spectra::{
    canonical_to_standard, extract_peaks, fourier_transform_padded, window_by_name, Peak,
};
use epac_core::{CorrelationSeries, Error as CoreError, PotentialSpec, SystemParams};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::Manifest;

pub fn beta_dir(cfg: &RunConfig, beta: f64) -> PathBuf {
    cfg.run.out_dir.join(format!("beta_{beta}"))
}

fn write_err(path: &Path) -> impl FnOnce(CoreError) -> CliError + '_ {
    CliError::io(path)
}

fn read_err(path: &Path) -> impl FnOnce(CoreError) -> CliError + '_ {
    move |e| match e {
        CoreError::Io(ref io) if io.kind() == std::io::ErrorKind::NotFound => CliError::Io {
            context: format!("{} (run the stage that produces it first)", path.display()),
            source: e,
        },
        e => CliError::Io {
            context: path.display().to_string(),
            source: e,
        },
    }
}

fn oracle_err(e: CoreError) -> CliError {
    match e {
        CoreError::BoundaryLeak { .. } => CliError::Numerical(format!(
            "{e}; widen [oracle.q_min, oracle.q_max] and raise oracle.n_points to keep the spacing"
        )),
        CoreError::NotConverged(_) => CliError::Numerical(format!("{e}; raise oracle.n_points")),
        e => e.into(),
    }
}

/// Exact and canonical correlations, line spectra and the eigensystem.
pub fn solve_exact(cfg: &RunConfig, self_test: bool) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let grid = cfg.grid()?;
    let times = time_grid(cfg.oracle.dt, cfg.oracle.t_max);
    let registry = MethodRegistry::default();
    let mut m = Manifest::new("solve-exact", cfg);
    let harmonic = if self_test {
        Some(harmonic_frequency(&pot)?)
    } else {
        None
    };
    for &beta in &cfg.system.betas {
        let sys = cfg.system(beta)?;
        let dir = beta_dir(cfg, beta);
        let n = required_states(&pot, &sys, &grid).map_err(oracle_err)?;
        info!("beta = {beta}: solving for {n} states");
        let eig = solve_eigensystem(&pot, &sys, &grid, n).map_err(oracle_err)?;
        let inputs = CorrelationInputs {
            beta: Some(beta),
            eigensystem: Some(&eig),
            ..Default::default()
        };
        let exact = registry.compute("exact", &inputs, &times)?;
        let canonical = registry.compute("canonical", &inputs, &times)?;
        let files = [
            (dir.join("eigensystem.json"), None),
            (dir.join("exact.csv"), Some(&exact)),
            (dir.join("canonical.csv"), Some(&canonical)),
        ];
        for (path, series) in &files {
            match series {
                Some(s) => write_series(path, s).map(|_| ()),
                None => write_json(path, &eig).map(|_| ()),
            }
            .map_err(write_err(path))?;
            m.output(path)?;
        }
        for (name, lines) in [
            ("exact_lines.csv", exact_spectrum(&eig, beta)?),
            ("canonical_lines.csv", canonical_spectrum(&eig, beta)?),
        ] {
            let path = dir.join(name);
            write_lines(&path, &lines).map_err(write_err(&path))?;
            m.output(&path)?;
        }
        if let Some(omega) = harmonic {
            harmonic_checks(&sys, pot.mass(), omega, &eig, &exact, &canonical)?;
            println!("PASS harmonic closed forms at beta = {beta}");
        }
    }
    m.write()?;
    Ok(())
}

/// `omega` of `V = m omega^2 q^2 / 2`; anything else is a config error.
fn harmonic_frequency(pot: &PotentialSpec) -> Result<f64, CliError> {
    match pot.coefficients() {
        [c0, c1, k] if *c0 == 0.0 && *c1 == 0.0 && *k > 0.0 => Ok((2.0 * k / pot.mass()).sqrt()),
        _ => Err(CliError::Config(
            "--self-test needs a harmonic potential with coefficients [0, 0, k]".into(),
        )),
    }
}

/// Ladder `hbar omega (n + 1/2)` for `n < 10`, `C(0) = (hbar / 2 m omega) coth(beta hbar omega / 2)`
/// and `C^CAN(t) = cos(omega t) / (beta m omega^2)`.
fn harmonic_checks(
    sys: &SystemParams,
    mass: f64,
    omega: f64,
    eig: &EigenSystem,
    exact: &CorrelationSeries,
    canonical: &CorrelationSeries,
) -> Result<(), CliError> {
    let hbar = sys.hbar;
    for n in 0..eig.n_states().min(10) {
        let expected = hbar * omega * (n as f64 + 0.5);
        if (eig.energies[n] - expected).abs() > 1e-6 {
            return Err(CliError::Check(format!(
                "E_{n} = {} but the ladder gives {expected}",
                eig.energies[n]
            )));
        }
    }
    let x = sys.beta * hbar * omega;
    let c0 = hbar / (2.0 * mass * omega) / (0.5 * x).tanh();
    if (exact.values[0].re - c0).abs() > 1e-6 * c0 {
        return Err(CliError::Check(format!(
            "C(0) = {} but the closed form gives {c0}",
            exact.values[0].re
        )));
    }
    let amplitude = 1.0 / (sys.beta * mass * omega * omega);
    for (t, v) in canonical.times.iter().zip(&canonical.values) {
        let expected = amplitude * (omega * t).cos();
        if (v.re - expected).abs() > 1e-6 * amplitude || v.im.abs() > 1e-12 {
            return Err(CliError::Check(format!(
                "C^CAN({t}) = {v} but the closed form gives {expected}"
            )));
        }
    }
    Ok(())
}

/// A stored table is reused when its hash, grid, temperature and sampler settings all match.
fn reusable_table(
    path: &Path,
    sys: &SystemParams,
    sampler: &SamplerConfig,
    grid: &[f64],
) -> Option<ForceTable> {
    let meta: serde_json::Value = read_json(&sidecar_path(path)).ok()?;
    let stored: SamplerConfig = read_json(&path.with_file_name("sampler.json")).ok()?;
    let table = read_force_table(path).ok()?;
    let samples = sampler.production_steps / sampler.sample_every;
    let hash_ok = meta.get("sha256").and_then(|v| v.as_str()) == sha256_file(path).ok().as_deref();
    let matches = hash_ok
        && stored == *sampler
        && table.beta == sys.beta
        && table.trotter == sampler.trotter_number(sys.beta)
        && table.q_c == grid
        && table.n_samples.iter().all(|&n| n == samples);
    matches.then_some(table)
}

/// Centroid force table by constrained PIMD, and the classical curve from its fit.
pub fn pimd_ecp(cfg: &RunConfig) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let sampler = cfg.sampler();
    let mut m = Manifest::new("pimd-ecp", cfg);
    for &beta in &cfg.system.betas {
        let sys = cfg.system(beta)?;
        let dir = beta_dir(cfg, beta);
        let (lo, hi) = cfg
            .pimd
            .window
            .unwrap_or_else(|| default_centroid_window(&pot, &sys));
        let grid = centroid_grid(lo, hi, cfg.grid_points());
        let path = dir.join("forces.csv");
        let sampler_path = dir.join("sampler.json");
        let table = match reusable_table(&path, &sys, &sampler, &grid) {
            Some(t) => {
                info!("beta = {beta}: reusing force table {}", path.display());
                t
            }
            None => {
                info!(
                    "beta = {beta}: sampling {} centroid points on [{lo}, {hi}], P = {}",
                    grid.len(),
                    sampler.trotter_number(beta)
                );
                let t = centroid_force_grid_with(&pot, &sys, &grid, &sampler, |_, s| {
                    info!(
                        "  q_c = {:+.4}: F = {:+.6} +- {:.2e} (drift {:.1e})",
                        s.q_c, s.force.mean, s.force.stderr, s.drift
                    );
                })?;
                write_force_table(&path, &t).map_err(write_err(&path))?;
                write_json(&sampler_path, &sampler).map_err(write_err(&sampler_path))?;
                t
            }
        };
        m.output(&path)?;
        m.output(&sampler_path)?;
        let fit = fit_force_polynomial(&table, cfg.effpot.degree, cfg.effpot.odd_only)?;
        info!(
            "beta = {beta}: force fit chi2/dof = {:.3}, condition {:.2e}",
            fit.chi2_per_dof, fit.condition
        );
        let ecp = integrate_to_ecp(
            &fit,
            beta,
            0.0,
            &uniform_grid(fit.window.0, fit.window.1, cfg.effpot.ecp_points),
        )?;
        let classical = dir.join("classical.csv");
        write_curve(
            &classical,
            &ecp,
            Some(&sha256_file(&path).map_err(write_err(&path))?),
        )
        .map_err(write_err(&classical))?;
        m.output(&classical)?;
    }
    m.write()?;
    Ok(())
}

/// Effective-frequency record passed from the Legendre stage to the EPAC stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRecord {
    pub beta: f64,
    pub mass: f64,
    pub hbar: f64,
    pub omega: f64,
    /// Bootstrap standard deviation of `omega`.
    pub omega_stderr: f64,
    pub q_min: f64,
    pub curvature: f64,
    pub window_spread: f64,
    pub chi2_per_dof: f64,
    pub condition: f64,
    pub outside_mass: f64,
    pub quadrature_error: f64,
    pub bootstrap_resamples: usize,
    pub bootstrap_failures: usize,
}

/// Names the interior points whose second difference falls below the convexity tolerance.
pub fn convexity_diagnostic(
    curve: &EffectivePotentialCurve,
    second_difference_stderr: &[f64],
    quadrature_error: f64,
    k: f64,
) -> Result<(), String> {
    let tolerance =
        convexity_tolerance(second_difference_stderr, quadrature_error, k, &curve.values);
    let bad = curve.convexity_violations(&tolerance);
    if bad.is_empty() {
        return Ok(());
    }
    let d = curve.second_differences();
    let detail: Vec<String> = bad
        .iter()
        .take(5)
        .map(|&i| {
            format!(
                "Q = {:+.4}: {:.3e} (tolerance {:.1e})",
                curve.abscissae[i],
                d[i - 1],
                tolerance[i - 1]
            )
        })
        .collect();
    Err(format!(
        "standard effective potential is non-convex at {} of {} points: {}",
        bad.len(),
        d.len(),
        detail.join("; ")
    ))
}

/// Standard effective potential, its bootstrap errors, and the frequency record.
pub fn legendre(cfg: &RunConfig) -> Result<(), CliError> {
    let mass = cfg.potential()?.mass();
    let mut m = Manifest::new("legendre", cfg);
    let mut failure = None;
    for &beta in &cfg.system.betas {
        let dir = beta_dir(cfg, beta);
        let forces = dir.join("forces.csv");
        let table = read_force_table(&forces).map_err(read_err(&forces))?;
        m.input(&forces)?;
        let r = run_effective_potential(&table, mass, &cfg.effpot)?;
        let resamples = cfg.legendre.bootstrap_resamples;
        let boot = bootstrap_standard_curve(
            &table,
            mass,
            &cfg.effpot,
            resamples,
            cfg.run.seed.wrapping_add(1),
        )?;
        if boot.failures > 0 {
            warn!(
                "beta = {beta}: {} of {resamples} bootstrap resamples failed",
                boot.failures
            );
        }
        let quad = r.generating.quadrature_error;
        let mut standard = r.standard.clone();
        standard.stderr = boot.standard_stderr.iter().map(|s| s.hypot(quad)).collect();
        let record = FrequencyRecord {
            beta,
            mass,
            hbar: cfg.system.hbar,
            omega: r.frequency.omega,
            omega_stderr: boot.omega.stderr,
            q_min: r.frequency.q_min,
            curvature: r.frequency.curvature,
            window_spread: r.frequency.window_spread,
            chi2_per_dof: r.force.chi2_per_dof,
            condition: r.force.condition,
            outside_mass: r.generating.outside_mass,
            quadrature_error: quad,
            bootstrap_resamples: boot.resamples,
            bootstrap_failures: boot.failures,
        };
        info!(
            "beta = {beta}: omega_beta = {:.6} +- {:.6}, Q_min = {}",
            record.omega, record.omega_stderr, record.q_min
        );
        let paths = [
            dir.join("standard.csv"),
            dir.join("generating.json"),
            dir.join("frequency.json"),
        ];
        let hash = sha256_file(&forces).map_err(read_err(&forces))?;
        write_curve(&paths[0], &standard, Some(&hash)).map_err(write_err(&paths[0]))?;
        write_json(&paths[1], &r.generating).map_err(write_err(&paths[1]))?;
        write_json(&paths[2], &record).map_err(write_err(&paths[2]))?;
        for p in &paths {
            m.output(p)?;
        }
        if let Err(msg) = convexity_diagnostic(
            &standard,
            &boot.second_difference_stderr,
            quad,
            cfg.legendre.convexity_sigma,
        ) {
            failure.get_or_insert(format!("beta = {beta}: {msg}"));
        }
    }
    match failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => {
            m.write()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct EnsembleSummary {
    size: usize,
    seed: u64,
    kinetic_temperature: epac_core::stats::Estimate,
    mean_position: epac_core::stats::Estimate,
    second_moment: epac_core::stats::Estimate,
}

/// Centroid ensemble on the classical curve and the CMD correlation.
pub fn cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let mass = cfg.potential()?.mass();
    let mut m = Manifest::new("cmd", cfg);
    let seed = cfg.run.seed.wrapping_add(2);
    for &beta in &cfg.system.betas {
        let sys = cfg.system(beta)?;
        let dir = beta_dir(cfg, beta);
        let classical = dir.join("classical.csv");
        let ecp = read_curve(&classical).map_err(read_err(&classical))?;
        m.input(&classical)?;
        let n = cfg.ensemble_size();
        info!("beta = {beta}: sampling {n} initial centroids");
        let ensemble = sample_initial_centroids(&ecp, &sys, mass, n, seed, &cfg.cmd.sampling)?;
        info!("beta = {beta}: propagating {n} trajectories");
        let series = centroid_correlation(&ensemble, &ecp, &cfg.cmd.correlation)?;
        let out = dir.join("cmd.csv");
        write_series(&out, &series).map_err(write_err(&out))?;
        m.output(&out)?;
        let summary = EnsembleSummary {
            size: ensemble.len(),
            seed,
            kinetic_temperature: ensemble.kinetic_temperature(),
            mean_position: ensemble.mean_position(),
            second_moment: ensemble.second_moment(),
        };
        let path = dir.join("ensemble.json");
        write_json(&path, &summary).map_err(write_err(&path))?;
        m.output(&path)?;
    }
    m.write()?;
    Ok(())
}

/// Closed-form EPAC correlation, line spectrum and spectral function.
pub fn epac(cfg: &RunConfig) -> Result<(), CliError> {
    let registry = MethodRegistry::default();
    let times = time_grid(cfg.epac.dt, cfg.epac.t_max);
    let mut m = Manifest::new("epac", cfg);
    for &beta in &cfg.system.betas {
        let dir = beta_dir(cfg, beta);
        let freq_path = dir.join("frequency.json");
        let f: FrequencyRecord = read_json(&freq_path).map_err(read_err(&freq_path))?;
        m.input(&freq_path)?;
        let params = EpacParameters {
            omega_beta: f.omega,
            q_min: f.q_min,
            mass: f.mass,
            beta: Some(beta),
            hbar: f.hbar,
            z_beta: cfg.epac.z_beta,
        };
        params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let inputs = CorrelationInputs {
            beta: Some(beta),
            epac: Some(params),
            ..Default::default()
        };
        let mut methods = vec![("epac", "epac.csv")];
        if params.z_beta.is_some() {
            methods.push(("epac2", "epac2.csv"));
        }
        for (name, file) in methods {
            let path = dir.join(file);
            write_series(&path, &registry.compute(name, &inputs, &times)?)
                .map_err(write_err(&path))?;
            m.output(&path)?;
        }
        for (file, lines) in [
            ("epac_lines.csv", epac_spectrum(&params)?),
            (
                "epac_spectral_function.csv",
                epac_spectral_function(&params)?,
            ),
        ] {
            let path = dir.join(file);
            write_lines(&path, &lines).map_err(write_err(&path))?;
            m.output(&path)?;
        }
    }
    m.write()?;
    Ok(())
}

/// Series that the spectra stage transforms when present; canonical-type
/// series also get the Kubo-converted standard estimate.
const SPECTRUM_SOURCES: [(&str, bool); 5] = [
    ("exact", false),
    ("canonical", true),
    ("cmd", true),
    ("epac", false),
    ("epac2", false),
];

/// Windowed Fourier transforms of every available series, with peak lists.
pub fn spectra(cfg: &RunConfig) -> Result<(), CliError> {
    let window = window_by_name(&cfg.spectra.window)?;
    let mut m = Manifest::new("spectra", cfg);
    for &beta in &cfg.system.betas {
        let dir = beta_dir(cfg, beta);
        let mut peaks: BTreeMap<String, Vec<Peak>> = BTreeMap::new();
        for (name, canonical) in SPECTRUM_SOURCES {
            let path = dir.join(format!("{name}.csv"));
            if !path.exists() {
                continue;
            }
            let series = read_series(&path).map_err(read_err(&path))?;
            m.input(&path)?;
            let spec = fourier_transform_padded(&series, window.as_ref(), cfg.spectra.padding)?;
            let mut estimates = vec![(name.to_string(), spec)];
            if canonical {
                let standard = canonical_to_standard(&estimates[0].1, beta, cfg.system.hbar);
                estimates.push((format!("{name}_standard"), standard));
            }
            for (label, spec) in estimates {
                let out = dir.join(format!("spectrum_{label}.csv"));
                write_spectrum(&out, &spec).map_err(write_err(&out))?;
                m.output(&out)?;
                let top = spec.values.iter().map(|v| v.re).fold(0.0, f64::max);
                if top > 0.0 {
                    peaks.insert(
                        label,
                        extract_peaks(&spec, cfg.spectra.peak_fraction * top)?,
                    );
                }
            }
        }
        if peaks.is_empty() {
            return Err(CliError::Config(format!(
                "no correlation series under {}; run solve-exact, cmd or epac first",
                dir.display()
            )));
        }
        let path = dir.join("peaks.json");
        write_json(&path, &peaks).map_err(write_err(&path))?;
        m.output(&path)?;
    }
    m.write()?;
    Ok(())
}

/// Linear interpolation of a uniformly sampled series at `t`.
fn sample_at(s: &CorrelationSeries, t: f64) -> Option<(f64, f64, f64)> {
    let step = s.uniform_step().ok()?;
    let x = (t - s.times[0]) / step;
    if x < -1e-9 || x > (s.len() - 1) as f64 + 1e-9 {
        return None;
    }
    let i = (x.floor() as usize).min(s.len().saturating_sub(2));
    let w = (x - i as f64).clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| a + w * (b - a);
    let (a, b) = (s.values[i], s.values[(i + 1).min(s.len() - 1)]);
    let err = s
        .stderr
        .as_ref()
        .map_or(0.0, |e| lerp(e[i], e[(i + 1).min(s.len() - 1)]));
    Some((lerp(a.re, b.re), lerp(a.im, b.im), err))
}

#[derive(Serialize)]
struct ComparisonRow {
    t: f64,
    exact_re: f64,
    exact_im: f64,
    canonical: f64,
    cmd: Option<f64>,
    cmd_stderr: Option<f64>,
    epac_re: Option<f64>,
    epac_im: Option<f64>,
}

/// Deviation of an approximate series from its reference on the common times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationMetrics {
    /// `max |C_approx - C_ref|` for `t <= early_time`.
    pub max_early_deviation: f64,
    /// First time the deviation exceeds `threshold_fraction * C_ref(0)`.
    pub first_crossing: Option<f64>,
    /// `|C_approx(0) - C_ref(0)|`.
    pub initial_deviation: f64,
    /// Standard error of `C_approx(0)` when known.
    pub initial_stderr: f64,
}

/// `compare` output for one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    pub beta: f64,
    pub threshold_fraction: f64,
    pub early_time: f64,
    pub exact_initial: f64,
    pub canonical_initial: f64,
    /// CMD against the canonical correlation.
    pub cmd: Option<DeviationMetrics>,
    /// Real part of EPAC against the standard correlation.
    pub epac: Option<DeviationMetrics>,
}

pub fn deviation_metrics(
    times: &[f64],
    approx: &[f64],
    stderr0: f64,
    reference: &[f64],
    threshold_fraction: f64,
    early_time: f64,
) -> DeviationMetrics {
    let threshold = threshold_fraction * reference[0].abs();
    let dev: Vec<f64> = approx
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).abs())
        .collect();
    DeviationMetrics {
        max_early_deviation: times
            .iter()
            .zip(&dev)
            .filter(|(t, _)| **t <= early_time + 1e-9)
            .fold(0.0, |a, (_, d)| a.max(*d)),
        first_crossing: times
            .iter()
            .zip(&dev)
            .find(|(_, d)| **d > threshold)
            .map(|(t, _)| *t),
        initial_deviation: dev[0],
        initial_stderr: stderr0,
    }
}

/// Joined table of all correlations on the exact time grid, and deviation metrics.
pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let mut m = Manifest::new("compare", cfg);
    let c = &cfg.compare;
    for &beta in &cfg.system.betas {
        let dir = beta_dir(cfg, beta);
        let load = |name: &str,
                    required: bool,
                    m: &mut Manifest|
         -> Result<Option<CorrelationSeries>, CliError> {
            let path = dir.join(format!("{name}.csv"));
            if !required && !path.exists() {
                return Ok(None);
            }
            let s = read_series(&path).map_err(read_err(&path))?;
            m.input(&path)?;
            Ok(Some(s))
        };
        let exact = load("exact", true, &mut m)?.expect("required");
        let canonical = load("canonical", true, &mut m)?.expect("required");
        let cmd = load("cmd", false, &mut m)?;
        let epac = load("epac", false, &mut m)?;
        let mut rows = Vec::new();
        for (k, &t) in exact.times.iter().enumerate() {
            let Some(can) = sample_at(&canonical, t) else {
                break;
            };
            let cm = cmd.as_ref().map(|s| sample_at(s, t));
            let ep = epac.as_ref().map(|s| sample_at(s, t));
            if matches!(cm, Some(None)) || matches!(ep, Some(None)) {
                break;
            }
            rows.push(ComparisonRow {
                t,
                exact_re: exact.values[k].re,
                exact_im: exact.values[k].im,
                canonical: can.0,
                cmd: cm.flatten().map(|v| v.0),
                cmd_stderr: cm.flatten().map(|v| v.2),
                epac_re: ep.flatten().map(|v| v.0),
                epac_im: ep.flatten().map(|v| v.1),
            });
        }
        if rows.is_empty() {
            return Err(CliError::Config(
                "correlation series share no common times".into(),
            ));
        }
        let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
        let canonical_re: Vec<f64> = rows.iter().map(|r| r.canonical).collect();
        let exact_re: Vec<f64> = rows.iter().map(|r| r.exact_re).collect();
        let metrics = ComparisonMetrics {
            beta,
            threshold_fraction: c.threshold_fraction,
            early_time: c.early_time,
            exact_initial: exact_re[0],
            canonical_initial: canonical_re[0],
            cmd: cmd.as_ref().map(|_| {
                let v: Vec<f64> = rows.iter().map(|r| r.cmd.unwrap_or(f64::NAN)).collect();
                deviation_metrics(
                    &times,
                    &v,
                    rows[0].cmd_stderr.unwrap_or(0.0),
                    &canonical_re,
                    c.threshold_fraction,
                    c.early_time,
                )
            }),
            epac: epac.as_ref().map(|_| {
                let v: Vec<f64> = rows.iter().map(|r| r.epac_re.unwrap_or(f64::NAN)).collect();
                deviation_metrics(
                    &times,
                    &v,
                    0.0,
                    &exact_re,
                    c.threshold_fraction,
                    c.early_time,
                )
            }),
        };
        if let Some(d) = &metrics.cmd {
            info!(
                "beta = {beta}: CMD max early deviation {:.4e}, first crossing {:?}, |C^c(0) - C^CAN(0)| = {:.3e} +- {:.1e}",
                d.max_early_deviation, d.first_crossing, d.initial_deviation, d.initial_stderr
            );
        }
        if let Some(d) = &metrics.epac {
            info!(
                "beta = {beta}: EPAC max early deviation {:.4e}, first crossing {:?}, |C^AC(0) - C(0)| = {:.3e}",
                d.max_early_deviation, d.first_crossing, d.initial_deviation
            );
        }
        let table = dir.join("comparison.csv");
        write_rows(&table, &rows)?;
        m.output(&table)?;
        let path = dir.join("metrics.json");
        write_json(&path, &json!(metrics)).map_err(write_err(&path))?;
        m.output(&path)?;
    }
    m.write()?;
    Ok(())
}

fn write_rows<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io {
        context: path.display().to_string(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io {
        context: path.display().to_string(),
        source: e.into(),
    })
}

/// Every stage in order.
pub fn run_all(cfg: &RunConfig) -> Result<(), CliError> {
    solve_exact(cfg, false)?;
    pimd_ecp(cfg)?;
    legendre(cfg)?;
    cmd(cfg)?;
    epac(cfg)?;
    spectra(cfg)?;
    compare(cfg)
}
