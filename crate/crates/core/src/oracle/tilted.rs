//! Generating function of a constant source from eigenvalues of `V(q) - J q`.

use super::{hamiltonian, richardson, GridSpec, BOUNDARY_TOLERANCE};
use crate::error::{Error, Result};
use crate::model::{PotentialSpec, SystemParams};

/// States are added until `e^{-beta (E_n - E_0)}` drops below this.
pub const STATE_TAIL_CUTOFF: f64 = 1e-12;

/// Relative Boltzmann factor at which the generating-function sum stops.
const GENERATING_TAIL: f64 = 1e-14;

/// Extra states kept above the thermal cutoff so that transitions out of the
/// last populated state are represented.
const STATE_MARGIN: usize = 8;

/// Energies from the extrapolated discretization, lowest `count`.
fn energies(pot: &PotentialSpec, sys: &SystemParams, grid: &GridSpec, count: usize) -> Vec<f64> {
    let coarse = hamiltonian(pot, sys, grid).lowest_eigenvalues(count);
    let fine = hamiltonian(pot, sys, &grid.refined()).lowest_eigenvalues(count);
    richardson(&coarse, &fine)
}

/// Number of states in the lowest thermally relevant block
/// (`e^{-beta (E_n - E_0)} < 1e-12`) plus a small margin.
pub fn required_states(pot: &PotentialSpec, sys: &SystemParams, grid: &GridSpec) -> Result<usize> {
    let limit = (grid.n_points - 2) / 4;
    let t = hamiltonian(pot, sys, grid);
    let e0 = t.eigenvalue(0);
    let cutoff = e0 - STATE_TAIL_CUTOFF.ln() / sys.beta;
    let below = t.count_below(cutoff);
    let n = below + STATE_MARGIN;
    if n > limit {
        return Err(Error::NotConverged(format!(
            "{n} states needed at beta = {} but the grid resolves at most {limit}; refine the grid",
            sys.beta
        )));
    }
    Ok(n)
}

/// `w(J) = (1/beta) log sum_n e^{-beta E_n(J)}` for the tilted Hamiltonian.
pub fn tilted_generating_function(
    pot: &PotentialSpec,
    sys: &SystemParams,
    grid: &GridSpec,
    source: f64,
) -> Result<f64> {
    let tilted = pot.tilted(source);
    let t = hamiltonian(&tilted, sys, grid);
    let e0 = t.eigenvalue(0);
    let cutoff = e0 - GENERATING_TAIL.ln() / sys.beta;
    let count = t.count_below(cutoff).max(1);
    if count > (grid.n_points - 2) / 4 {
        return Err(Error::NotConverged(format!(
            "{count} states needed at J = {source}; refine the grid"
        )));
    }
    // the highest contributing state must still vanish at the walls
    let top = t.eigenvalue(count - 1);
    let psi = t.eigenvector(top, &[]);
    let norm = grid.spacing().sqrt();
    let edge = psi[0].abs().max(psi[psi.len() - 1].abs()) / norm;
    if edge > BOUNDARY_TOLERANCE {
        return Err(Error::BoundaryLeak {
            state: count - 1,
            value: edge,
        });
    }
    let e = energies(&tilted, sys, grid, count);
    let base = e[0];
    let sum: f64 = e.iter().map(|en| (-sys.beta * (en - base)).exp()).sum();
    Ok(-base + sum.ln() / sys.beta)
}

/// [`tilted_generating_function`] at each source value.
pub fn tilted_generating_function_grid(
    pot: &PotentialSpec,
    sys: &SystemParams,
    grid: &GridSpec,
    sources: &[f64],
) -> Result<Vec<f64>> {
    sources
        .iter()
        .map(|&j| tilted_generating_function(pot, sys, grid, j))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_shift_is_quadratic() {
        let pot = PotentialSpec::harmonic(1.0, 1.0);
        let sys = SystemParams::natural(1.0);
        let grid = GridSpec::new(-14.0, 14.0, 3501).unwrap();
        let w0 = tilted_generating_function(&pot, &sys, &grid, 0.0).unwrap();
        for j in [0.5, -1.2, 2.0] {
            let w = tilted_generating_function(&pot, &sys, &grid, j).unwrap();
            assert!((w - w0 - 0.5 * j * j).abs() < 1e-8, "J={j}: {}", w - w0);
        }
    }

    #[test]
    fn symmetric_in_source() {
        let pot = PotentialSpec::double_well();
        let sys = SystemParams::natural(10.0);
        let grid = GridSpec::default_double_well();
        let a = tilted_generating_function(&pot, &sys, &grid, 0.8).unwrap();
        let b = tilted_generating_function(&pot, &sys, &grid, -0.8).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn strong_tilt_leaks() {
        let pot = PotentialSpec::harmonic(1.0, 1.0);
        let sys = SystemParams::natural(1.0);
        let grid = GridSpec::new(-4.0, 4.0, 801).unwrap();
        assert!(matches!(
            tilted_generating_function(&pot, &sys, &grid, 6.0),
            Err(Error::BoundaryLeak { .. })
        ));
    }
}
