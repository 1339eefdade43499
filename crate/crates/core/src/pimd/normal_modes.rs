//! Real orthogonal normal-mode basis of the cyclic ring polymer.

use std::f64::consts::PI;

/// Orthogonal transform `q = T u` diagonalizing the cyclic spring matrix.
///
/// Mode 0 is the centroid scaled by `sqrt(P)`: `u_0 = sqrt(P) * mean(q)`.
/// Modes are ordered by spring eigenvalue `lambda_k = 4 sin^2(pi k / P)`;
/// cosine and sine partners share `k`, and for even `P` the last mode is the
/// alternating path.
#[derive(Debug, Clone)]
pub struct NormalModes {
    p: usize,
    /// `t[j * p + k]`: bead `j`, mode `k`.
    t: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl NormalModes {
    pub fn new(p: usize) -> Self {
        assert!(p >= 2, "Trotter number must be at least 2");
        let pf = p as f64;
        let mut t = vec![0.0; p * p];
        let mut eigenvalues = vec![0.0; p];
        let norm0 = 1.0 / pf.sqrt();
        let norm = (2.0 / pf).sqrt();
        for j in 0..p {
            t[j * p] = norm0;
        }
        let mut index = 1;
        for k in 1..=(p - 1) / 2 {
            let lambda = 4.0 * (PI * k as f64 / pf).sin().powi(2);
            for j in 0..p {
                let phase = 2.0 * PI * (j * k) as f64 / pf;
                t[j * p + index] = norm * phase.cos();
                t[j * p + index + 1] = norm * phase.sin();
            }
            eigenvalues[index] = lambda;
            eigenvalues[index + 1] = lambda;
            index += 2;
        }
        if p % 2 == 0 {
            for j in 0..p {
                t[j * p + p - 1] = if j % 2 == 0 { norm0 } else { -norm0 };
            }
            eigenvalues[p - 1] = 4.0;
        }
        Self { p, t, eigenvalues }
    }

    pub fn len(&self) -> usize {
        self.p
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Eigenvalues of the cyclic difference matrix, one per mode.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `u = T^T q`.
    pub fn to_modes(&self, beads: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        self.to_modes_into(beads, &mut out);
        out
    }

    pub fn to_modes_into(&self, beads: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (j, &q) in beads.iter().enumerate() {
            let row = &self.t[j * self.p..(j + 1) * self.p];
            for (o, &c) in out.iter_mut().zip(row) {
                *o += c * q;
            }
        }
    }

    /// `q = T u`.
    pub fn to_beads(&self, modes: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        self.to_beads_into(modes, &mut out);
        out
    }

    pub fn to_beads_into(&self, modes: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.t[j * self.p..(j + 1) * self.p];
            *o = row.iter().zip(modes).map(|(c, u)| c * u).sum();
        }
    }
}
