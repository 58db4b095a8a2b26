//! Spectral reconstruction of the protocol, used as an independent check on
//! the direct simulation.
//!
//! In the eigenbasis `Q` of the lazy Metropolis matrix each coordinate
//! `z_i = (Q^T y)_i` evolves on its own through the 2x2 companion matrix
//! `B(lambda_i) = [[alpha lambda, -(alpha - 1) lambda], [1, 0]]`.

use crate::error::{Error, Result};
use crate::graphs::{lazy_metropolis, symmetric_eigen, Graph};

use super::{check_dim, MomentumParams};

fn power_apply(lambda: f64, alpha: f64, r: f64, t: usize) -> (f64, f64) {
    let (mut a, mut b) = (r, r);
    for _ in 1..t {
        let next = alpha * lambda * a - (alpha - 1.0) * lambda * b;
        b = a;
        a = next;
    }
    (a, b)
}

/// `B(lambda)^(t-1) (r, r)` for a non-principal eigenvalue `lambda in [0, 1)`.
pub fn block_iterate(lambda: f64, p: &MomentumParams, r: f64, t: usize) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "block iteration needs lambda in [0, 1), got {lambda}"
        )));
    }
    if t == 0 {
        return Err(Error::InvalidParameter("rounds start at t = 1".into()));
    }
    Ok(power_apply(lambda, p.alpha, r, t))
}

#[derive(Debug, Clone)]
pub struct SpectralTrajectory {
    /// `y(t)` reconstructed in node coordinates.
    pub y: Vec<f64>,
    /// `z(t) = Q^T y(t)`, ordered like `eigenvalues` (descending).
    pub z: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

/// `y(t)` of the accelerated protocol computed through the eigendecomposition
/// of the lazy Metropolis matrix instead of by stepping the nodes.
pub fn spectral_simulate(g: &Graph, x1: &[f64], p: &MomentumParams, t: usize) -> Result<Vec<f64>> {
    Ok(spectral_coordinates(g, x1, p, t)?.y)
}

pub fn spectral_coordinates(
    g: &Graph,
    x1: &[f64],
    p: &MomentumParams,
    t: usize,
) -> Result<SpectralTrajectory> {
    g.require_connected()?;
    check_dim(g.node_count(), x1.len())?;
    if t == 0 {
        return Err(Error::InvalidParameter("rounds start at t = 1".into()));
    }
    let n = g.node_count();
    if t == 1 {
        return Ok(SpectralTrajectory {
            y: x1.to_vec(),
            z: Vec::new(),
            eigenvalues: Vec::new(),
        });
    }
    let m = lazy_metropolis(g)?;
    let eig = symmetric_eigen(m.as_slice(), n, true)?;

    let z: Vec<f64> = (0..n)
        .map(|k| {
            let z1: f64 = (0..n).map(|row| eig.vector_entry(row, k) * x1[row]).sum();
            // The principal eigenvalue is 1 up to roundoff, which the
            // recursion maps to a fixed point, so no special case is needed.
            power_apply(eig.values[k], p.alpha, z1, t).0
        })
        .collect();
    let y = (0..n)
        .map(|row| (0..n).map(|k| eig.vector_entry(row, k) * z[k]).sum())
        .collect();
    Ok(SpectralTrajectory {
        y,
        z,
        eigenvalues: eig.values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{consensus_step, mean, ConsensusState};
    use crate::graphs::{complete_graph, line_graph, NeighborWeights};

    fn direct_y(g: &Graph, x1: &[f64], p: &MomentumParams, t: usize) -> Vec<f64> {
        let w = NeighborWeights::metropolis(g).unwrap();
        let mut s = ConsensusState::new(x1.to_vec());
        while s.t < t {
            s = consensus_step(&s, &w, p).unwrap();
        }
        s.y
    }

    #[test]
    fn block_iterate_identity_at_t1() {
        let p = MomentumParams::default_schedule(5.0).unwrap();
        for lambda in [0.0, 0.3, 0.99] {
            assert_eq!(block_iterate(lambda, &p, 2.5, 1).unwrap(), (2.5, 2.5));
        }
    }

    #[test]
    fn block_iterate_at_zero_eigenvalue() {
        let p = MomentumParams::default_schedule(5.0).unwrap();
        assert_eq!(block_iterate(0.0, &p, 3.0, 2).unwrap(), (0.0, 3.0));
        for t in 3..10 {
            assert_eq!(block_iterate(0.0, &p, 3.0, t).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn block_iterate_rejects_principal_eigenvalue() {
        let p = MomentumParams::default_schedule(5.0).unwrap();
        assert!(block_iterate(1.0, &p, 1.0, 3).is_err());
        assert!(block_iterate(-0.1, &p, 1.0, 3).is_err());
    }

    #[test]
    fn block_decay_three_node_path() {
        let p = MomentumParams::default_schedule(3.0).unwrap();
        for t in 1..=200 {
            let (_, second) = block_iterate(0.75, &p, 1.0, t).unwrap();
            let bound = 2.0 * (1.0 - 1.0 / 27.0f64).powi(t as i32 - 1);
            assert!(second * second <= bound + 1e-12, "t={t}");
        }
    }

    #[test]
    fn block_iterate_matches_explicit_matrix_power() {
        // Independent route: multiply out the 2x2 matrix.
        let p = MomentumParams::default_schedule(7.0).unwrap();
        let lambda = 0.81;
        let b = [[p.alpha * lambda, -(p.alpha - 1.0) * lambda], [1.0, 0.0]];
        let mut acc = [[1.0, 0.0], [0.0, 1.0]];
        for t in 1..=60usize {
            let q = block_iterate(lambda, &p, 1.0, t).unwrap();
            let expect = (acc[0][0] + acc[0][1], acc[1][0] + acc[1][1]);
            assert!((q.0 - expect.0).abs() < 1e-12 && (q.1 - expect.1).abs() < 1e-12);
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = b[i][0] * acc[0][j] + b[i][1] * acc[1][j];
                }
            }
            acc = next;
        }
    }

    #[test]
    fn spectral_identity_at_t1() {
        let g = line_graph(4).unwrap();
        let p = MomentumParams::default_schedule(4.0).unwrap();
        let x1 = [0.3, -1.0, 2.0, 0.7];
        assert_eq!(spectral_simulate(&g, &x1, &p, 1).unwrap(), x1.to_vec());
    }

    #[test]
    fn spectral_matches_direct_three_node_path() {
        let g = line_graph(3).unwrap();
        let p = MomentumParams::default_schedule(3.0).unwrap();
        let x1 = [1.0, 0.0, 0.0];
        let a = spectral_simulate(&g, &x1, &p, 5).unwrap();
        let b = direct_y(&g, &x1, &p, 5);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn z_coordinates_carry_the_deviation() {
        let g = complete_graph(4).unwrap();
        let p = MomentumParams::default_schedule(4.0).unwrap();
        let x1 = [3.0, -1.0, 0.5, 2.0];
        let traj = spectral_coordinates(&g, &x1, &p, 10).unwrap();
        let direct = direct_y(&g, &x1, &p, 10);
        let xbar = mean(&x1);
        let lhs: f64 = direct.iter().map(|v| (v - xbar).powi(2)).sum();
        let rhs: f64 = traj.z[1..].iter().map(|z| z * z).sum();
        assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }
}
