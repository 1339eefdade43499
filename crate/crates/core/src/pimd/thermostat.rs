//! Nosé–Hoover chains, one per degree of freedom, propagated in lockstep.

use rand::Rng;
use rand_distr::StandardNormal;

/// Fourth-order Suzuki–Yoshida weights for the chain propagator.
fn suzuki_yoshida() -> [f64; 3] {
    let w1 = 1.0 / (2.0 - 2f64.powf(1.0 / 3.0));
    [w1, 1.0 - 2.0 * w1, w1]
}

/// Arguments below this magnitude are exponentiated by truncated series.
const SERIES_LIMIT: f64 = 0.2;

/// `exp(x)`; with `SERIES` the caller guarantees `|x| < SERIES_LIMIT`.
#[inline(always)]
fn chain_exp<const SERIES: bool>(x: f64) -> f64 {
    if SERIES {
        exp_series(x)
    } else if x.abs() < SERIES_LIMIT {
        exp_series(x)
    } else {
        x.exp()
    }
}

/// Taylor coefficients `1 / k!`, `k = 0..=12`.
const EXP_COEFFS: [f64; 13] = [
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
    1.0 / 362880.0,
    1.0 / 3628800.0,
    1.0 / 39916800.0,
    1.0 / 479001600.0,
];

/// Degree-12 Taylor polynomial of `exp`, exact to rounding for `|x| < SERIES_LIMIT`.
#[inline(always)]
fn exp_series(x: f64) -> f64 {
    EXP_COEFFS.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Independent chains of `M` links with common link mass `Q = kT / Omega^2`,
/// one chain per thermostatted degree of freedom.
///
/// Link variables are stored link-major (`velocities[link][dof]`) so that all
/// chains advance through each link update together.
#[derive(Debug, Clone)]
pub struct ThermostatChains {
    mass: f64,
    kt: f64,
    /// Multiple-time-step subdivisions of each half step.
    substeps: usize,
    velocities: Vec<Vec<f64>>,
    positions: Vec<Vec<f64>>,
    forces: Vec<Vec<f64>>,
    kinetic: Vec<f64>,
    scale: Vec<f64>,
    /// `exp(-d8 v_{j+1})` from the downward sweep, reused by the upward sweep.
    factors: Vec<Vec<f64>>,
}

impl ThermostatChains {
    /// Link velocities start Maxwell-distributed (dof-major draw order),
    /// positions at zero.
    pub fn new<R: Rng>(
        dof: usize,
        length: usize,
        kt: f64,
        frequency: f64,
        substeps: usize,
        rng: &mut R,
    ) -> Self {
        assert!(length >= 2, "thermostat chains need at least two links");
        assert!(substeps >= 1, "thermostat substeps must be positive");
        let mass = kt / (frequency * frequency);
        let sigma = (kt / mass).sqrt();
        let mut velocities = vec![vec![0.0; dof]; length];
        for i in 0..dof {
            for link in velocities.iter_mut() {
                link[i] = sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Self {
            mass,
            kt,
            substeps,
            velocities,
            positions: vec![vec![0.0; dof]; length],
            forces: vec![vec![0.0; dof]; length],
            kinetic: vec![0.0; dof],
            scale: vec![0.0; dof],
            factors: vec![vec![0.0; dof]; length - 1],
        }
    }

    /// Number of thermostatted degrees of freedom.
    pub fn len(&self) -> usize {
        self.kinetic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinetic.is_empty()
    }

    /// Links per chain.
    pub fn chain_length(&self) -> usize {
        self.velocities.len()
    }

    /// Kinetic plus `kT xi` terms of the extended Hamiltonian, all chains.
    pub fn energy(&self) -> f64 {
        self.velocities
            .iter()
            .zip(&self.positions)
            .flat_map(|(v, x)| v.iter().zip(x))
            .map(|(v, x)| 0.5 * self.mass * v * v + self.kt * x)
            .sum()
    }

    /// Propagates every chain over `dt / 2` and rescales the attached momenta.
    pub fn half_step(&mut self, momenta: &mut [f64], masses: &[f64], dt: f64) {
        assert_eq!(momenta.len(), self.len());
        assert_eq!(masses.len(), self.len());
        // Largest exponent is |w| d2 |v| with |w| <= 1.71; the factor 1.5 covers
        // growth of v within the step.
        let v_max = self
            .velocities
            .iter()
            .flatten()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let d2_max = 1.71 * dt / (2.0 * self.substeps as f64);
        if 1.5 * d2_max * v_max < SERIES_LIMIT {
            self.propagate::<true>(momenta, masses, dt);
        } else {
            self.propagate::<false>(momenta, masses, dt);
        }
    }

    fn propagate<const SERIES: bool>(&mut self, momenta: &mut [f64], masses: &[f64], dt: f64) {
        let m = self.velocities.len();
        let q = self.mass;
        let kt_q = self.kt / q;
        for ((k, s), (p, mass)) in self
            .kinetic
            .iter_mut()
            .zip(&mut self.scale)
            .zip(momenta.iter().zip(masses))
        {
            *k = p * p / mass;
            *s = 1.0;
        }
        for (g, k) in self.forces[0].iter_mut().zip(&self.kinetic) {
            *g = k / q - kt_q;
        }
        for j in 1..m {
            for (g, v) in self.forces[j].iter_mut().zip(&self.velocities[j - 1]) {
                *g = v * v - kt_q;
            }
        }
        let weights = suzuki_yoshida();
        for w in (0..self.substeps).flat_map(|_| weights) {
            let d2 = w * dt / (2.0 * self.substeps as f64);
            let d4 = d2 / 2.0;
            let d8 = d4 / 2.0;
            for (v, g) in self.velocities[m - 1].iter_mut().zip(&self.forces[m - 1]) {
                *v += g * d4;
            }
            for j in (0..m - 1).rev() {
                let (lower, upper) = self.velocities.split_at_mut(j + 1);
                for (((v, g), vn), aa) in lower[j]
                    .iter_mut()
                    .zip(&self.forces[j])
                    .zip(&upper[0])
                    .zip(self.factors[j].iter_mut())
                {
                    *aa = chain_exp::<SERIES>(-d8 * vn);
                    *v = *v * *aa * *aa + d4 * g * *aa;
                }
            }
            for (((s, k), g), v) in self
                .scale
                .iter_mut()
                .zip(&mut self.kinetic)
                .zip(&mut self.forces[0])
                .zip(&self.velocities[0])
            {
                let f = chain_exp::<SERIES>(-d2 * v);
                *s *= f;
                *k *= f * f;
                *g = *k / q - kt_q;
            }
            for (xs, vs) in self.positions.iter_mut().zip(&self.velocities) {
                for (x, v) in xs.iter_mut().zip(vs) {
                    *x += d2 * v;
                }
            }
            // Link j + 1 is untouched between the two sweeps, so its factor is unchanged.
            for j in 0..m - 1 {
                let (g_lower, g_upper) = self.forces.split_at_mut(j + 1);
                for (((v, g), aa), g_next) in self.velocities[j]
                    .iter_mut()
                    .zip(&g_lower[j])
                    .zip(&self.factors[j])
                    .zip(g_upper[0].iter_mut())
                {
                    *v = *v * aa * aa + d4 * g * aa;
                    *g_next = *v * *v - kt_q;
                }
            }
            for (v, g) in self.velocities[m - 1].iter_mut().zip(&self.forces[m - 1]) {
                *v += g * d4;
            }
        }
        for (p, s) in momenta.iter_mut().zip(&self.scale) {
            *p *= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn series_exponential_matches_libm() {
        for i in -200..=200 {
            let x = i as f64 * 1e-3;
            assert!((exp_series(x) - x.exp()).abs() <= 4.0 * f64::EPSILON * x.exp());
            let y = 10.0 * x;
            assert!((chain_exp::<false>(y) - y.exp()).abs() <= 4.0 * f64::EPSILON * y.exp());
        }
    }

    /// Thermostatted harmonic oscillators: conserved quantity and equipartition.
    #[test]
    fn harmonic_oscillators_thermalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kt = 0.5;
        let dt = 0.1;
        let masses = [1.0, 2.0, 0.5];
        let stiffness = [1.0, 2.0, 0.5];
        let mut chains = ThermostatChains::new(3, 4, kt, 1.0, 4, &mut rng);
        let mut x = [1.0, -0.5, 0.2];
        let mut p = [0.0; 3];
        let energy = |x: &[f64; 3], p: &[f64; 3], c: &ThermostatChains| {
            (0..3)
                .map(|i| 0.5 * p[i] * p[i] / masses[i] + 0.5 * stiffness[i] * x[i] * x[i])
                .sum::<f64>()
                + c.energy()
        };
        let n = 200_000;
        let mut trace = Vec::with_capacity(n);
        let mut x2 = [0.0; 3];
        for _ in 0..n {
            chains.half_step(&mut p, &masses, dt);
            for i in 0..3 {
                p[i] -= 0.5 * dt * stiffness[i] * x[i];
                x[i] += dt * p[i] / masses[i];
                p[i] -= 0.5 * dt * stiffness[i] * x[i];
            }
            chains.half_step(&mut p, &masses, dt);
            for i in 0..3 {
                x2[i] += x[i] * x[i];
            }
            trace.push(energy(&x, &p, &chains));
        }
        let w = n / 10;
        let head = trace[..w].iter().sum::<f64>() / w as f64;
        let tail = trace[n - w..].iter().sum::<f64>() / w as f64;
        let drift = (tail - head).abs() / (3.0 * kt);
        assert!(drift < 1e-3, "relative drift {drift}");
        for i in 0..3 {
            let mean = x2[i] / n as f64;
            let want = kt / stiffness[i];
            assert!((mean - want).abs() < 0.05 * want, "dof {i}: <x^2> = {mean}");
        }
    }
}
