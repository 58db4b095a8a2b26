//! Dense symmetric eigendecomposition (cyclic Jacobi rotations) and the
//! second-eigenvalue report for lazy Metropolis matrices.

use crate::error::{Error, Result};

use super::StochasticMatrix;

/// Off-diagonal Frobenius norm at which the sweeps stop.
const OFF_DIAGONAL_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues sorted descending; `vectors` is row-major with column `k`
/// holding the unit eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
    dim: usize,
}

impl SymmetricEigen {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(row, k)` of the eigenvector matrix.
    pub fn vector_entry(&self, row: usize, k: usize) -> f64 {
        self.vectors
            .as_ref()
            .expect("eigenvectors were not requested")[row * self.dim + k]
    }
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub lambda2: f64,
    /// `1 - 1/(71 n^2)`, the quadratic-gap ceiling for lazy Metropolis `lambda2`.
    pub gap_bound: f64,
}

impl SpectralReport {
    pub fn margin(&self) -> f64 {
        self.gap_bound - self.lambda2
    }
}

/// Full spectrum of a symmetric matrix; `lambda2` is the second largest.
pub fn spectral_report(m: &StochasticMatrix) -> Result<SpectralReport> {
    if m.dim() < 2 {
        return Err(Error::InvalidSize("spectral report needs dim >= 2".into()));
    }
    let eig = symmetric_eigen(m.as_slice(), m.dim(), false)?;
    let n = m.dim() as f64;
    Ok(SpectralReport {
        lambda2: eig.values[1],
        gap_bound: 1.0 - 1.0 / (71.0 * n * n),
        eigenvalues: eig.values,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric row-major `dim x dim`
/// matrix.
pub fn symmetric_eigen(a: &[f64], dim: usize, want_vectors: bool) -> Result<SymmetricEigen> {
    if a.len() != dim * dim || dim == 0 {
        return Err(Error::InvalidMatrix(format!(
            "expected {dim}x{dim} entries, got {}",
            a.len()
        )));
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            if (a[i * dim + j] - a[j * dim + i]).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidMatrix(format!("not symmetric at ({i}, {j})")));
            }
        }
    }

    let n = dim;
    let mut m = a.to_vec();
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[i * n + j] * m[i * n + j];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&m) > OFF_DIAGONAL_TOL {
        if sweeps == MAX_SWEEPS {
            return Err(Error::InvalidMatrix(format!(
                "Jacobi sweeps did not converge after {MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // Rotation angle chosen to zero (p, q); smaller root of
                // t^2 + 2 theta t - 1 = 0 for stability.
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = v.map(|v| {
        let mut sorted = vec![0.0; n * n];
        for (k, &src) in order.iter().enumerate() {
            for row in 0..n {
                sorted[row * n + k] = v[row * n + src];
            }
        }
        sorted
    });
    Ok(SymmetricEigen {
        values,
        vectors,
        dim: n,
    })
}
