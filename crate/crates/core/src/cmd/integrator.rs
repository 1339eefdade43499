//! Symplectic one-dimensional integrators, selectable by name.

use super::CentroidField;
use crate::error::{Error, Result};

/// One step of a time-reversible symplectic map for `m q'' = F(q)`.
pub trait Integrator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Global order of accuracy.
    fn order(&self) -> usize;

    /// Force evaluations per step.
    fn force_evaluations(&self) -> usize;

    /// Advances `(q, p)` by `dt`; `f` holds the force at `q` on entry and on exit.
    fn step(
        &self,
        field: &dyn CentroidField,
        mass: f64,
        dt: f64,
        q: &mut f64,
        p: &mut f64,
        f: &mut f64,
    );
}

fn kick_drift_kick(
    field: &dyn CentroidField,
    mass: f64,
    h: f64,
    q: &mut f64,
    p: &mut f64,
    f: &mut f64,
) {
    *p += 0.5 * h * *f;
    *q += h * *p / mass;
    *f = field.force(*q);
    *p += 0.5 * h * *f;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VelocityVerlet;

impl Integrator for VelocityVerlet {
    fn name(&self) -> &'static str {
        "velocity-verlet"
    }

    fn order(&self) -> usize {
        2
    }

    fn force_evaluations(&self) -> usize {
        1
    }

    fn step(
        &self,
        field: &dyn CentroidField,
        mass: f64,
        dt: f64,
        q: &mut f64,
        p: &mut f64,
        f: &mut f64,
    ) {
        kick_drift_kick(field, mass, dt, q, p, f);
    }
}

/// Triple-jump composition of velocity Verlet.
#[derive(Debug, Clone, Copy, Default)]
pub struct Yoshida4;

impl Yoshida4 {
    const WEIGHTS: [f64; 3] = {
        // 2^(1/3)
        let c = 1.259_921_049_894_873_2;
        let outer = 1.0 / (2.0 - c);
        [outer, -c * outer, outer]
    };
}

impl Integrator for Yoshida4 {
    fn name(&self) -> &'static str {
        "yoshida4"
    }

    fn order(&self) -> usize {
        4
    }

    fn force_evaluations(&self) -> usize {
        3
    }

    fn step(
        &self,
        field: &dyn CentroidField,
        mass: f64,
        dt: f64,
        q: &mut f64,
        p: &mut f64,
        f: &mut f64,
    ) {
        for w in Self::WEIGHTS {
            kick_drift_kick(field, mass, w * dt, q, p, f);
        }
    }
}

/// Registered integrator names, default first.
pub const INTEGRATORS: [&str; 2] = ["yoshida4", "velocity-verlet"];

pub fn integrator_by_name(name: &str) -> Result<Box<dyn Integrator>> {
    match name {
        "yoshida4" => Ok(Box::new(Yoshida4)),
        "velocity-verlet" => Ok(Box::new(VelocityVerlet)),
        _ => Err(Error::UnknownStrategy {
            family: "integrator",
            name: name.to_string(),
            available: INTEGRATORS.join(", "),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PotentialSpec;

    #[test]
    fn weights_sum_to_one() {
        let s: f64 = Yoshida4::WEIGHTS.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert!((Yoshida4::WEIGHTS[0] - 1.351_207_191_959_657_8).abs() < 1e-15);
    }

    #[test]
    fn registry_round_trips() {
        for name in INTEGRATORS {
            assert_eq!(integrator_by_name(name).unwrap().name(), name);
        }
        assert!(matches!(
            integrator_by_name("leapfrog"),
            Err(Error::UnknownStrategy { .. })
        ));
    }

    #[test]
    fn order_shows_in_harmonic_phase_error() {
        let pot = PotentialSpec::harmonic(1.0, 1.0);
        for name in INTEGRATORS {
            let int = integrator_by_name(name).unwrap();
            let error = |dt: f64| {
                let (mut q, mut p) = (1.0, 0.0);
                let mut f = pot.force(q);
                let n = (2.0 / dt).round() as usize;
                for _ in 0..n {
                    int.step(&pot, 1.0, dt, &mut q, &mut p, &mut f);
                }
                (q - 2f64.cos()).abs()
            };
            let ratio = error(0.02) / error(0.01);
            let expected = 2f64.powi(int.order() as i32);
            assert!((ratio / expected - 1.0).abs() < 0.1, "{name}: {ratio}");
        }
    }
}
