//! Multi-order cross attention block.
//!
//! Given the input `P` and output `O` of an hourglass unit, both `N x d` with
//! `N = w * h` spatial positions:
//!
//! ```text
//! Z  = P P^T + O O^T + P O^T
//! Z^ = softmax(Z)            (row-wise)
//! P' = gamma Z^ O + O
//! ```
//!
//! `O P^T` is left out. Softmax runs along the second index so every row of
//! `Z^ O` is a convex mixture of the rows of `O`.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// An `n x d` feature matrix, one row per spatial position.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap(pub(crate) DMatrix<f64>);

impl FeatureMap {
    /// Build from row-major values.
    pub fn from_row_slice(n: usize, d: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * d {
            return invalid(format!(
                "feature map {n}x{d} needs {} values, got {}",
                n * d,
                values.len()
            ));
        }
        Self::from_matrix(DMatrix::from_row_slice(n, d, values))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return invalid("feature map must have n >= 1 and d >= 1");
        }
        if m.iter().any(|v| !v.is_finite()) {
            return invalid("feature map has non-finite entries");
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize, d: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::zeros(n, d))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn d(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

fn check_pair(p: &FeatureMap, o: &FeatureMap) -> Result<()> {
    if p.n() != o.n() || p.d() != o.d() {
        return invalid(format!(
            "P is {}x{} but O is {}x{}",
            p.n(),
            p.d(),
            o.n(),
            o.d()
        ));
    }
    Ok(())
}

/// `Z = P P^T + O O^T + P O^T`.
pub fn cross_order_correlation(p: &FeatureMap, o: &FeatureMap) -> Result<DMatrix<f64>> {
    check_pair(p, o)?;
    let (p, o) = (&p.0, &o.0);
    Ok(p * p.transpose() + o * o.transpose() + p * o.transpose())
}

/// Softmax along each row with max subtraction.
pub fn row_softmax(z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = z.clone();
    for mut row in out.row_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// `P' = gamma softmax(Z) O + O`.
pub fn mcg_forward(p: &FeatureMap, o: &FeatureMap, gamma: f64) -> Result<FeatureMap> {
    let zhat = row_softmax(&cross_order_correlation(p, o)?);
    Ok(FeatureMap(apply_attention(&zhat, &o.0, gamma)))
}

fn apply_attention(zhat: &DMatrix<f64>, o: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    (zhat * o) * gamma + o
}

/// The block's learnable scale plus the matrices from the last forward pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct McgState {
    /// Starts at 0, which makes the block an identity on `O`.
    pub gamma: f64,
    pub last_z: Option<DMatrix<f64>>,
    pub last_zhat: Option<DMatrix<f64>>,
}

impl McgState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_gamma(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    /// Forward pass that keeps `Z` and `Z^` for inspection.
    pub fn forward(&mut self, p: &FeatureMap, o: &FeatureMap) -> Result<FeatureMap> {
        let z = cross_order_correlation(p, o)?;
        let zhat = row_softmax(&z);
        let out = apply_attention(&zhat, &o.0, self.gamma);
        self.last_z = Some(z);
        self.last_zhat = Some(zhat);
        Ok(FeatureMap(out))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McgGradients {
    pub grad_p: DMatrix<f64>,
    pub grad_o: DMatrix<f64>,
    pub grad_gamma: f64,
}

/// Gradients of `<upstream, P'>` with respect to `P`, `O` and `gamma`.
pub fn mcg_backward(
    p: &FeatureMap,
    o: &FeatureMap,
    gamma: f64,
    upstream: &DMatrix<f64>,
) -> Result<McgGradients> {
    check_pair(p, o)?;
    if upstream.nrows() != o.n() || upstream.ncols() != o.d() {
        return invalid(format!(
            "upstream gradient is {}x{}, expected {}x{}",
            upstream.nrows(),
            upstream.ncols(),
            o.n(),
            o.d()
        ));
    }
    let (pm, om) = (&p.0, &o.0);
    let zhat = row_softmax(&cross_order_correlation(p, o)?);

    let attended = &zhat * om;
    let grad_gamma = upstream.dot(&attended);

    // through Z^ O
    let d_attended = upstream * gamma;
    let d_zhat = &d_attended * om.transpose();
    let mut grad_o = upstream + zhat.transpose() * &d_attended;

    // softmax Jacobian, row by row
    let mut d_z = d_zhat.component_mul(&zhat);
    for (mut dz_row, zhat_row) in d_z.row_iter_mut().zip(zhat.row_iter()) {
        let inner: f64 = dz_row.sum();
        for (dz, s) in dz_row.iter_mut().zip(zhat_row.iter()) {
            *dz -= s * inner;
        }
    }

    // Z = P P^T + O O^T + P O^T
    let sym = &d_z + d_z.transpose();
    let grad_p = &sym * pm + &d_z * om;
    grad_o += &sym * om + d_z.transpose() * pm;

    Ok(McgGradients {
        grad_p,
        grad_o,
        grad_gamma,
    })
}
