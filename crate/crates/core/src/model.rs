//! Classical potentials and the unit/temperature profile shared by every stage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial;

/// Highest potential degree accepted by [`PotentialSpec::classical_minima`].
pub const MAX_MINIMA_DEGREE: usize = 8;

/// Polynomial potential `V(q) = sum_k c_k q^k` for a particle of mass `mass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    coefficients: Vec<f64>,
    mass: f64,
    symmetric: bool,
}

impl PotentialSpec {
    /// Validates confinement (even leading degree, positive leading coefficient),
    /// mass positivity and, when `symmetric`, that odd coefficients vanish.
    pub fn new(coefficients: Vec<f64>, mass: f64, symmetric: bool) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPotential("non-finite coefficient".into()));
        }
        let trimmed = polynomial::trimmed(&coefficients);
        let degree = trimmed.len().saturating_sub(1);
        if trimmed.is_empty() || degree == 0 || degree % 2 != 0 || trimmed[degree] <= 0.0 {
            return Err(Error::InvalidPotential(
                "leading coefficient must have even degree and positive sign".into(),
            ));
        }
        if symmetric {
            if let Some(k) = trimmed
                .iter()
                .enumerate()
                .find(|(k, &c)| k % 2 == 1 && c != 0.0)
                .map(|(k, _)| k)
            {
                return Err(Error::InvalidPotential(format!(
                    "symmetric potential has nonzero odd coefficient c_{k}"
                )));
            }
        }
        Ok(Self {
            coefficients: trimmed.to_vec(),
            mass,
            symmetric,
        })
    }

    /// `V(q) = -q^2/2 + q^4/10`, unit mass.
    pub fn double_well() -> Self {
        Self::new(vec![0.0, 0.0, -0.5, 0.0, 0.1], 1.0, true).expect("valid double well")
    }

    /// `V(q) = m omega^2 q^2 / 2`.
    pub fn harmonic(mass: f64, omega: f64) -> Self {
        Self::new(vec![0.0, 0.0, 0.5 * mass * omega * omega], mass, true)
            .expect("valid harmonic potential")
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval_potential(&self, q: f64) -> f64 {
        polynomial::eval(&self.coefficients, q)
    }

    /// `-dV/dq`.
    pub fn eval_force(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coefficients.iter().enumerate().skip(1).rev() {
            acc = acc * q + k as f64 * c;
        }
        -acc
    }

    pub fn second_derivative(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coefficients.iter().enumerate().skip(2).rev() {
            acc = acc * q + (k * (k - 1)) as f64 * c;
        }
        acc
    }

    /// Local minima of `V`, ascending.
    pub fn classical_minima(&self) -> Result<Vec<f64>> {
        if self.degree() > MAX_MINIMA_DEGREE {
            return Err(Error::DegreeTooHigh {
                degree: self.degree(),
                max: MAX_MINIMA_DEGREE,
            });
        }
        let slope = polynomial::derivative(&self.coefficients);
        Ok(polynomial::real_roots(&slope)
            .into_iter()
            .filter(|&q| self.second_derivative(q) > 0.0)
            .collect())
    }

    /// `V(q) - J q`; never flagged symmetric.
    pub fn tilted(&self, source: f64) -> Self {
        let mut coefficients = self.coefficients.clone();
        coefficients[1] -= source;
        Self {
            coefficients,
            mass: self.mass,
            symmetric: self.symmetric && source == 0.0,
        }
    }
}

/// Inverse temperature and the unit profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub beta: f64,
    pub hbar: f64,
    pub boltzmann: f64,
}

impl SystemParams {
    pub fn new(beta: f64, hbar: f64, boltzmann: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("hbar", hbar), ("boltzmann", boltzmann)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            beta,
            hbar,
            boltzmann,
        })
    }

    /// `hbar = k_B = 1`.
    pub fn natural(beta: f64) -> Self {
        Self::new(beta, 1.0, 1.0).expect("positive beta")
    }

    /// `k_B T` in energy units.
    pub fn thermal_energy(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn temperature(&self) -> f64 {
        1.0 / (self.boltzmann * self.beta)
    }

    pub fn beta_hbar(&self) -> f64 {
        self.beta * self.hbar
    }
}
