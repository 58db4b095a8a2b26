use crate::error::{Error, Result};

use super::Graph;

/// Dense row-major square matrix holding Metropolis-type averaging weights.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    /// Wraps row-major entries. Only squareness is checked here; use
    /// [`StochasticMatrix::max_row_sum_error`] and
    /// [`StochasticMatrix::max_asymmetry`] to audit the stochastic structure.
    pub fn from_row_major(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {dim}x{dim} entries, got {}",
                entries.len()
            )));
        }
        Ok(StochasticMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// `out = W x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        out
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.dim)
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn min_diagonal(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.get(i, i))
            .fold(f64::INFINITY, f64::min)
    }
}

fn metropolis_weight(g: &Graph, i: usize, j: usize) -> f64 {
    1.0 / g.degree(i).max(g.degree(j)) as f64
}

/// Metropolis matrix: `1 / max(d(i), d(j))` on edges, diagonal fills each row
/// to one.
pub fn metropolis(g: &Graph) -> Result<StochasticMatrix> {
    g.require_connected()?;
    let n = g.node_count();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let mut off = 0.0;
        for &j in g.neighbors(i) {
            let w = metropolis_weight(g, i, j);
            entries[i * n + j] = w;
            off += w;
        }
        // Exact value is >= 0 since every weight is at most 1/d(i).
        entries[i * n + i] = (1.0 - off).max(0.0);
    }
    Ok(StochasticMatrix { dim: n, entries })
}

/// Lazy Metropolis matrix `I/2 + M/2`.
pub fn lazy_metropolis(g: &Graph) -> Result<StochasticMatrix> {
    let mut m = metropolis(g)?;
    let n = m.dim;
    for i in 0..n {
        for j in 0..n {
            let e = &mut m.entries[i * n + j];
            *e = if i == j { 0.5 + 0.5 * *e } else { 0.5 * *e };
        }
    }
    Ok(m)
}

/// Sparse per-node neighbor weights `w_ij`, applied in the local form
/// `x_i + 1/2 * sum_j w_ij (x_j - x_i)`. With Metropolis weights this is the
/// lazy Metropolis product computed without a dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborWeights {
    rows: Vec<Vec<(usize, f64)>>,
}

impl NeighborWeights {
    pub fn metropolis(g: &Graph) -> Result<Self> {
        g.require_connected()?;
        let rows = (0..g.node_count())
            .map(|i| {
                g.neighbors(i)
                    .iter()
                    .map(|&j| (j, metropolis_weight(g, i, j)))
                    .collect()
            })
            .collect();
        Ok(NeighborWeights { rows })
    }

    /// Symmetric weights from an explicit undirected weighted edge list.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidParameter(format!(
                    "bad weighted edge ({i}, {j}) for {n} nodes"
                )));
            }
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
        }
        Ok(NeighborWeights { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `out_i = x_i + 1/2 * sum_j w_ij (x_j - x_i)`.
    pub fn lazy_apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, (o, row)) in out.iter_mut().zip(&self.rows).enumerate() {
            let xi = x[i];
            let pull: f64 = row.iter().map(|&(j, w)| w * (x[j] - xi)).sum();
            *o = xi + 0.5 * pull;
        }
    }

    /// Dense lazy matrix `I + (W - diag(W 1)) / 2` built from these weights.
    pub fn to_lazy_dense(&self) -> StochasticMatrix {
        let n = self.dim();
        let mut entries = vec![0.0; n * n];
        for (i, row) in self.rows.iter().enumerate() {
            let mut off = 0.0;
            for &(j, w) in row {
                entries[i * n + j] = 0.5 * w;
                off += w;
            }
            entries[i * n + i] = 1.0 - 0.5 * off;
        }
        StochasticMatrix { dim: n, entries }
    }
}
