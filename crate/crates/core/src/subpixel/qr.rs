//! Householder QR least-squares solve.
//!
//! With `B = Q R`, `||A - B C||^2 = ||S - R1 C||^2 + ||T||^2` where
//! `Q^T A = [S; T]` and `R1` is the leading square block of `R`. The minimum
//! is reached at `C = R1^-1 S` and the leftover `||T||^2` is the residual.

use crate::error::{HsrError, Result};
use crate::subpixel::design::DesignSystem;

/// Relative magnitude below which a diagonal entry of `R1` counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coeffs: Vec<f64>,
    /// Mean squared residual `||T||^2 / L`.
    pub residual: f64,
}

pub fn solve_least_squares_qr(sys: &DesignSystem) -> Result<LeastSquares> {
    householder_solve(sys.matrix(), sys.len(), sys.columns(), sys.responses())
}

/// Solve `min ||a - B c||` for a row-major `rows x cols` matrix `B`.
pub fn householder_solve(
    matrix: &[f64],
    rows: usize,
    cols: usize,
    rhs: &[f64],
) -> Result<LeastSquares> {
    assert_eq!(matrix.len(), rows * cols, "matrix shape");
    assert_eq!(rhs.len(), rows, "rhs length");
    if rows < cols || cols == 0 {
        return Err(HsrError::InsufficientSupport {
            found: rows,
            needed: cols.max(1),
        });
    }

    let mut r = matrix.to_vec();
    let mut qta = rhs.to_vec();
    let mut v = vec![0.0; rows];

    for k in 0..cols {
        let norm = (k..rows)
            .map(|i| r[i * cols + k] * r[i * cols + k])
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            continue;
        }
        let pivot = r[k * cols + k];
        let alpha = if pivot >= 0.0 { -norm } else { norm };
        for i in k..rows {
            v[i] = r[i * cols + k];
        }
        v[k] -= alpha;
        let vnorm2: f64 = v[k..rows].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..cols {
            let dot: f64 = (k..rows).map(|i| v[i] * r[i * cols + j]).sum();
            let scale = 2.0 * dot / vnorm2;
            for i in k..rows {
                r[i * cols + j] -= scale * v[i];
            }
        }
        let dot: f64 = (k..rows).map(|i| v[i] * qta[i]).sum();
        let scale = 2.0 * dot / vnorm2;
        for i in k..rows {
            qta[i] -= scale * v[i];
        }
    }

    let max_diag = (0..cols)
        .map(|k| r[k * cols + k].abs())
        .fold(0.0f64, f64::max);
    for k in 0..cols {
        let d = r[k * cols + k].abs();
        if !(d >= RANK_TOLERANCE * max_diag) || max_diag == 0.0 {
            return Err(HsrError::SingularSystem {
                index: k,
                magnitude: d,
            });
        }
    }

    let mut coeffs = vec![0.0; cols];
    for k in (0..cols).rev() {
        let tail: f64 = (k + 1..cols).map(|j| r[k * cols + j] * coeffs[j]).sum();
        coeffs[k] = (qta[k] - tail) / r[k * cols + k];
    }
    let residual = qta[cols..].iter().map(|t| t * t).sum::<f64>() / rows as f64;

    Ok(LeastSquares { coeffs, residual })
}
