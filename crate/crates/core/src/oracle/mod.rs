//! Exact reference results from a finite-difference Schrödinger eigensolve.
//!
//! The Hamiltonian is discretized with the 3-point Laplacian and Dirichlet
//! boundaries. By default energies and position matrix elements are
//! Richardson-extrapolated from grids with spacing `h` and `h/2`, which
//! removes the leading `O(h^2)` stencil error.

mod correlation;
mod tilted;
pub mod tridiagonal;

pub use correlation::{
    canonical_spectrum, exact_canonical_correlation, exact_correlation, exact_spectrum,
    zero_temperature_correlation, BOLTZMANN_TAIL_TOLERANCE,
};
pub use tilted::{
    required_states, tilted_generating_function, tilted_generating_function_grid, STATE_TAIL_CUTOFF,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PotentialSpec, SystemParams};
use tridiagonal::SymTridiagonal;

/// Uniform grid `q_min, ..., q_max` with `n_points` points including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        if !(q_min < q_max) || !q_min.is_finite() || !q_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid requires q_min < q_max, got [{q_min}, {q_max}]"
            )));
        }
        if n_points < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 16 points, got {n_points}"
            )));
        }
        Ok(Self {
            q_min,
            q_max,
            n_points,
        })
    }

    /// `[-8, 8]` with 2001 points.
    pub fn default_double_well() -> Self {
        Self {
            q_min: -8.0,
            q_max: 8.0,
            n_points: 2001,
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Same interval with half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }
}

/// Eigenpairs of the discretized Hamiltonian.
///
/// `wavefunctions[n][i]` is `psi_n(q_i)` on the full grid (zero at both ends),
/// normalized so that `sum_i psi_m psi_n h = delta_mn`, and positive at the
/// last (rightmost) point where it is appreciable. `q_elements[m][n] = <m|q|n>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    #[serde(skip)]
    pub wavefunctions: Vec<Vec<f64>>,
    pub grid: GridSpec,
    pub q_elements: Vec<Vec<f64>>,
    pub mass: f64,
    pub hbar: f64,
}

impl EigenSystem {
    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    /// `<m|q|n>`.
    pub fn q_element(&self, m: usize, n: usize) -> f64 {
        self.q_elements[m][n]
    }

    /// Transition frequency `(E_m - E_n) / hbar`.
    pub fn frequency(&self, m: usize, n: usize) -> f64 {
        (self.energies[m] - self.energies[n]) / self.hbar
    }

    /// `sum_i psi_m(q_i) psi_n(q_i) h`.
    pub fn overlap(&self, m: usize, n: usize) -> f64 {
        let h = self.grid.spacing();
        self.wavefunctions[m]
            .iter()
            .zip(&self.wavefunctions[n])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * h
    }
}

/// Solver variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// Plain 3-point stencil on the given grid.
    ThreePoint,
    /// 3-point stencil on `h` and `h/2`, energies and matrix elements
    /// extrapolated as `(4 x_{h/2} - x_h) / 3`.
    #[default]
    Extrapolated,
}

/// Largest boundary amplitude tolerated for a returned state.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Lowest `n_states` eigenpairs of `-(hbar^2/2m) d^2/dq^2 + V(q)`.
pub fn solve_eigensystem(
    pot: &PotentialSpec,
    sys: &SystemParams,
    grid: &GridSpec,
    n_states: usize,
) -> Result<EigenSystem> {
    solve_eigensystem_with(pot, sys, grid, n_states, Discretization::Extrapolated)
}

pub fn solve_eigensystem_with(
    pot: &PotentialSpec,
    sys: &SystemParams,
    grid: &GridSpec,
    n_states: usize,
    discretization: Discretization,
) -> Result<EigenSystem> {
    let interior = grid.n_points - 2;
    if n_states == 0 || n_states > interior / 4 {
        return Err(Error::NotConverged(format!(
            "{n_states} states requested from a grid with {interior} interior points"
        )));
    }
    let coarse = RawSolution::compute(pot, sys, grid, n_states)?;
    let (energies, q_elements) = match discretization {
        Discretization::ThreePoint => (coarse.energies.clone(), coarse.q_elements()),
        Discretization::Extrapolated => {
            let fine_grid = grid.refined();
            let mut fine = RawSolution::compute(pot, sys, &fine_grid, n_states)?;
            fine.align_signs_to(&coarse);
            let top = n_states - 1;
            let change = (fine.energies[top] - coarse.energies[top]).abs();
            if change > 1e-3 * coarse.energies[top].abs().max(1.0) {
                return Err(Error::NotConverged(format!(
                    "state {top} moves by {change:.3e} under grid refinement; use a finer grid"
                )));
            }
            let energies = richardson(&coarse.energies, &fine.energies);
            let qc = coarse.q_elements();
            let qf = fine.q_elements();
            let q_elements = qc
                .iter()
                .zip(&qf)
                .map(|(rc, rf)| richardson(rc, rf))
                .collect();
            (energies, q_elements)
        }
    };
    let mut q_elements: Vec<Vec<f64>> = q_elements;
    // exact symmetry and parity zeros
    for m in 0..n_states {
        for n in 0..m {
            let avg = 0.5 * (q_elements[m][n] + q_elements[n][m]);
            let v = if pot.is_symmetric() && (m + n) % 2 == 0 {
                0.0
            } else {
                avg
            };
            q_elements[m][n] = v;
            q_elements[n][m] = v;
        }
        if pot.is_symmetric() {
            q_elements[m][m] = 0.0;
        }
    }
    Ok(EigenSystem {
        energies,
        wavefunctions: coarse.wavefunctions,
        grid: *grid,
        q_elements,
        mass: pot.mass(),
        hbar: sys.hbar,
    })
}

fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect()
}

pub(crate) fn hamiltonian(
    pot: &PotentialSpec,
    sys: &SystemParams,
    grid: &GridSpec,
) -> SymTridiagonal {
    let h = grid.spacing();
    let kinetic = sys.hbar * sys.hbar / (2.0 * pot.mass() * h * h);
    let interior = grid.n_points - 2;
    let diag = (1..=interior)
        .map(|i| 2.0 * kinetic + pot.eval_potential(grid.point(i)))
        .collect();
    SymTridiagonal::new(diag, vec![-kinetic; interior - 1])
}

struct RawSolution {
    grid: GridSpec,
    energies: Vec<f64>,
    wavefunctions: Vec<Vec<f64>>,
}

impl RawSolution {
    fn compute(
        pot: &PotentialSpec,
        sys: &SystemParams,
        grid: &GridSpec,
        n_states: usize,
    ) -> Result<Self> {
        let t = hamiltonian(pot, sys, grid);
        let energies = t.lowest_eigenvalues(n_states);
        let h = grid.spacing();
        let mut wavefunctions: Vec<Vec<f64>> = Vec::with_capacity(n_states);
        for (n, &e) in energies.iter().enumerate() {
            let scale = e.abs().max(1.0);
            // earlier states close enough to mix under inverse iteration
            let cluster: Vec<&[f64]> = energies[..n]
                .iter()
                .zip(&wavefunctions)
                .filter(|(&e2, _)| (e - e2).abs() < 1e-7 * scale)
                .map(|(_, v)| &v[1..grid.n_points - 1])
                .collect();
            let interior = {
                let mut v = t.eigenvector(e, &cluster);
                let norm = h.sqrt();
                v.iter_mut().for_each(|x| *x /= norm);
                let peak = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
                let last = v
                    .iter()
                    .rev()
                    .find(|x| x.abs() > 1e-3 * peak)
                    .copied()
                    .unwrap_or(1.0);
                if last < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            };
            let edge = interior[0].abs().max(interior[interior.len() - 1].abs());
            if edge > BOUNDARY_TOLERANCE {
                return Err(Error::BoundaryLeak {
                    state: n,
                    value: edge,
                });
            }
            let mut full = Vec::with_capacity(grid.n_points);
            full.push(0.0);
            full.extend(interior);
            full.push(0.0);
            wavefunctions.push(full);
        }
        Ok(Self {
            grid: *grid,
            energies,
            wavefunctions,
        })
    }

    fn q_elements(&self) -> Vec<Vec<f64>> {
        let h = self.grid.spacing();
        let q = self.grid.points();
        let n = self.energies.len();
        let mut out = vec![vec![0.0; n]; n];
        for a in 0..n {
            let qa: Vec<f64> = self.wavefunctions[a]
                .iter()
                .zip(&q)
                .map(|(p, x)| p * x)
                .collect();
            for b in a..n {
                let v = qa
                    .iter()
                    .zip(&self.wavefunctions[b])
                    .map(|(x, y)| x * y)
                    .sum::<f64>()
                    * h;
                out[a][b] = v;
                out[b][a] = v;
            }
        }
        out
    }

    /// Flip states of this (refined) solution to match `coarse` on shared points.
    fn align_signs_to(&mut self, coarse: &RawSolution) {
        for (fine, c) in self.wavefunctions.iter_mut().zip(&coarse.wavefunctions) {
            let dot: f64 = c.iter().enumerate().map(|(i, x)| x * fine[2 * i]).sum();
            if dot < 0.0 {
                fine.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic_system(n: usize) -> EigenSystem {
        solve_eigensystem(
            &PotentialSpec::harmonic(1.0, 1.0),
            &SystemParams::natural(1.0),
            &GridSpec::default_double_well(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn harmonic_ladder() {
        let eig = harmonic_system(10);
        for (n, e) in eig.energies.iter().enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-6, "E_{n} = {e}");
        }
        assert!(
            (eig.q_element(0, 1) - 0.5_f64.sqrt()).abs() < 1e-6,
            "{}",
            eig.q_element(0, 1)
        );
        assert!((eig.q_element(3, 4) - 2.0_f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn orthonormal_and_symmetric() {
        let eig = harmonic_system(8);
        for m in 0..8 {
            for n in 0..8 {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((eig.overlap(m, n) - want).abs() < 1e-6);
                assert!((eig.q_element(m, n) - eig.q_element(n, m)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn three_point_converges_at_second_order() {
        let pot = PotentialSpec::harmonic(1.0, 1.0);
        let sys = SystemParams::natural(1.0);
        let g = GridSpec::new(-8.0, 8.0, 401).unwrap();
        let e_h = solve_eigensystem_with(&pot, &sys, &g, 1, Discretization::ThreePoint).unwrap();
        let e_h2 = solve_eigensystem_with(&pot, &sys, &g.refined(), 1, Discretization::ThreePoint)
            .unwrap();
        let ratio = (e_h.energies[0] - 0.5).abs() / (e_h2.energies[0] - 0.5).abs();
        assert!(ratio >= 3.5, "ratio {ratio}");
    }

    #[test]
    fn narrow_grid_leaks() {
        let g = GridSpec::new(-2.0, 2.0, 201).unwrap();
        let r = solve_eigensystem(
            &PotentialSpec::harmonic(1.0, 1.0),
            &SystemParams::natural(1.0),
            &g,
            3,
        );
        assert!(matches!(r, Err(Error::BoundaryLeak { .. })));
    }

    #[test]
    fn too_many_states_for_grid() {
        let g = GridSpec::new(-8.0, 8.0, 41).unwrap();
        let r = solve_eigensystem(
            &PotentialSpec::harmonic(1.0, 1.0),
            &SystemParams::natural(1.0),
            &g,
            30,
        );
        assert!(matches!(r, Err(Error::NotConverged(_))));
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1.0, -1.0, 100).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 8).is_err());
        assert_eq!(GridSpec::default_double_well().refined().n_points, 4001);
    }
}
