//! Built-in checks against closed forms; independent of any config file.

use epac_core::epac::{epac2_correlation, epac_correlation, epac_spectrum, EpacParameters};
use epac_core::oracle::{
    canonical_spectrum, exact_canonical_correlation, exact_spectrum, solve_eigensystem, GridSpec,
};
use epac_core::series::time_grid;
use epac_core::spectra::canonical_to_standard_lines;
use epac_core::{PotentialSpec, SystemParams};

type Check = (&'static str, fn() -> Result<(), String>);

pub const CHECKS: [Check; 5] = [
    ("harmonic ladder E_n = n + 1/2 for n < 10", harmonic_ladder),
    (
        "harmonic canonical correlation cos(t) / beta",
        harmonic_canonical,
    ),
    (
        "Kubo factor maps canonical lines onto standard lines",
        kubo_lines,
    ),
    (
        "detailed balance of the double-well line spectrum",
        detailed_balance,
    ),
    (
        "EPAC identities: Z = m reduction and line synthesis",
        epac_identities,
    ),
];

fn harmonic_ladder() -> Result<(), String> {
    let pot = PotentialSpec::harmonic(1.0, 1.0);
    let eig = solve_eigensystem(
        &pot,
        &SystemParams::natural(1.0),
        &GridSpec::default_double_well(),
        10,
    )
    .map_err(|e| e.to_string())?;
    for (n, e) in eig.energies.iter().enumerate() {
        if (e - (n as f64 + 0.5)).abs() > 1e-6 {
            return Err(format!("E_{n} = {e}"));
        }
    }
    Ok(())
}

fn harmonic_canonical() -> Result<(), String> {
    let pot = PotentialSpec::harmonic(1.0, 1.0);
    let beta = 2.0;
    let grid = GridSpec::new(-12.0, 12.0, 3001).map_err(|e| e.to_string())?;
    let eig = solve_eigensystem(&pot, &SystemParams::natural(beta), &grid, 24)
        .map_err(|e| e.to_string())?;
    let c = exact_canonical_correlation(&eig, beta, &time_grid(0.1, 10.0))
        .map_err(|e| e.to_string())?;
    for (t, v) in c.times.iter().zip(&c.values) {
        if (v.re - t.cos() / beta).abs() > 1e-6 {
            return Err(format!("C^CAN({t}) = {}", v.re));
        }
    }
    Ok(())
}

fn double_well(beta: f64) -> Result<epac_core::oracle::EigenSystem, String> {
    solve_eigensystem(
        &PotentialSpec::double_well(),
        &SystemParams::natural(beta),
        &GridSpec::default_double_well(),
        24,
    )
    .map_err(|e| e.to_string())
}

fn kubo_lines() -> Result<(), String> {
    let beta = 1.0;
    let eig = double_well(beta)?;
    let exact = exact_spectrum(&eig, beta).map_err(|e| e.to_string())?;
    let converted = canonical_to_standard_lines(
        &canonical_spectrum(&eig, beta).map_err(|e| e.to_string())?,
        beta,
        1.0,
    );
    for l in &exact.lines {
        let tol = 1e-9 * (1.0 + l.frequency.abs());
        let w: f64 = converted
            .lines
            .iter()
            .filter(|c| (c.frequency - l.frequency).abs() <= tol)
            .map(|c| c.weight)
            .sum();
        if (w - l.weight).abs() > 1e-8 * (1.0 + l.weight.abs()) {
            return Err(format!("line at {}: {w} vs {}", l.frequency, l.weight));
        }
    }
    Ok(())
}

fn detailed_balance() -> Result<(), String> {
    let beta = 1.0;
    let lines = exact_spectrum(&double_well(beta)?, beta).map_err(|e| e.to_string())?;
    for neg in lines
        .lines
        .iter()
        .filter(|l| l.frequency < 0.0 && l.weight > 1e-8)
    {
        let pos = lines.nearest(-neg.frequency).ok_or("missing mirror line")?;
        let ratio = neg.weight / pos.weight;
        let expected = (-beta * pos.frequency).exp();
        if (ratio / expected - 1.0).abs() > 1e-10 {
            return Err(format!(
                "omega = {}: ratio {ratio} vs {expected}",
                pos.frequency
            ));
        }
    }
    Ok(())
}

fn epac_identities() -> Result<(), String> {
    let p = EpacParameters::new(0.7, 0.2, 1.0, Some(3.0)).map_err(|e| e.to_string())?;
    let times = time_grid(0.05, 20.0);
    let c1 = epac_correlation(&p, &times).map_err(|e| e.to_string())?;
    let c2 = epac2_correlation(&p.with_z(1.0).map_err(|e| e.to_string())?, &times)
        .map_err(|e| e.to_string())?;
    if c1.values != c2.values {
        return Err("second order with Z = m differs from leading order".into());
    }
    let synth = epac_spectrum(&p)
        .map_err(|e| e.to_string())?
        .synthesize(&times);
    for (a, b) in c1.values.iter().zip(&synth) {
        if (a - b).norm() > 1e-12 {
            return Err(format!("line synthesis misses by {}", (a - b).norm()));
        }
    }
    Ok(())
}

/// Prints one PASS/FAIL line per check; true if all pass.
pub fn run() -> bool {
    let mut ok = true;
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                ok = false;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    ok
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for (name, check) in super::CHECKS {
            assert!(check().is_ok(), "{name}: {:?}", check());
        }
    }
}
