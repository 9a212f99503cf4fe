//! Cyclic Jacobi eigen decomposition of small dense symmetric matrices.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("no convergence after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
}

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, sorted by eigenvalue descending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// `vectors[j]` is the unit eigenvector for `values[j]`.
    pub vectors: Vec<Vec<T>>,
    pub sweeps: usize,
    pub off_norm: T,
}

/// Frobenius norm of the strictly off-diagonal part.
pub fn off_diagonal_norm<T: Real>(a: &[Vec<T>]) -> T {
    let mut s = T::zero();
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if i != j {
                s += v * v;
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes the symmetric matrix `a` by plane rotations until the off-diagonal
/// Frobenius norm drops below `tol`. Only the upper triangle is read.
pub fn symmetric_eigen<T: Real>(a: &[Vec<T>], tol: T) -> Result<SymmetricEigen<T>, EigenError> {
    let n = a.len();
    if let Some(row) = a.iter().find(|r| r.len() != n) {
        return Err(EigenError::NotSquare { rows: n, cols: row.len() });
    }
    let mut m: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if j >= i { a[i][j] } else { a[j][i] }).collect())
        .collect();
    // v[i][j]: component i of eigenvector j
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();

    let two = T::one() + T::one();
    let hundred = T::from_f64_lossy(100.0);
    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&m);
    while off >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(EigenError::NoConvergence {
                sweeps,
                off_norm: off.to_f64_lossy(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p][p];
                let aqq = m[q][q];
                // entry below rounding relative to both diagonals: drop it
                let g = hundred * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[p][q] = T::zero();
                    m[q][p] = T::zero();
                    continue;
                }
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                m[p][q] = T::zero();
                m[q][p] = T::zero();
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        off = off_diagonal_norm(&m);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&j| m[j][j]).collect();
    let vectors = order.iter().map(|&j| v.iter().map(|row| row[j]).collect()).collect();
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
        off_norm: off,
    })
}
