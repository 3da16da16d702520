//! Log-linearized design system for weighted Gaussian surface fitting.
//!
//! For `f = G exp(-(x-u)^2/(2 sx^2) - (y-v)^2/(2 sy^2))` every sample obeys
//!
//! ```text
//! f ln f = c0 f + c1 x f + c2 y f + c3 x^2 f + c4 y^2 f
//! ```
//!
//! with `c0 = ln G - u^2/(2 sx^2) - v^2/(2 sy^2)`, `c1 = u/sx^2`,
//! `c2 = v/sy^2`, `c3 = -1/(2 sx^2)` and `c4 = -1/(2 sy^2)`. Multiplying the
//! log-domain equation through by `f` weights every row by its own value,
//! which keeps low-confidence tail pixels from dominating the solve.
//!
//! The isotropic basis (`sx = sy`) merges the two quadratic columns into
//! `(x^2 + y^2) f` and leaves four unknowns.

use crate::error::{invalid, HsrError, Result};
use crate::heatmap::Patch;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitBasis {
    /// `[f, xf, yf, x^2 f, y^2 f]`
    Anisotropic,
    /// `[f, xf, yf, (x^2 + y^2) f]`
    Isotropic,
}

impl FitBasis {
    pub const fn columns(self) -> usize {
        match self {
            FitBasis::Anisotropic => 5,
            FitBasis::Isotropic => 4,
        }
    }
}

/// A pixel taking part in the fit, in coordinates local to the argmax pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    pub f: f64,
}

/// The overdetermined system `A = B C`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSystem {
    basis: FitBasis,
    /// `a_l = f_l ln f_l`
    responses: Vec<f64>,
    /// Row-major `L x columns` matrix `B`.
    rows: Vec<f64>,
    samples: Vec<Sample>,
}

impl DesignSystem {
    /// Build the system from samples. Every sample must be strictly positive.
    pub fn from_samples(samples: Vec<Sample>, basis: FitBasis) -> Result<Self> {
        let cols = basis.columns();
        if samples.len() < cols {
            return Err(HsrError::InsufficientSupport {
                found: samples.len(),
                needed: cols,
            });
        }
        if let Some(s) = samples.iter().find(|s| !(s.f > 0.0) || !s.f.is_finite()) {
            return invalid(format!("sample value {} is not strictly positive", s.f));
        }
        let mut responses = Vec::with_capacity(samples.len());
        let mut rows = Vec::with_capacity(samples.len() * cols);
        for s in &samples {
            responses.push(s.f * s.f.ln());
            rows.extend_from_slice(&[s.f, s.f * s.x, s.f * s.y]);
            match basis {
                FitBasis::Anisotropic => {
                    rows.extend_from_slice(&[s.f * s.x * s.x, s.f * s.y * s.y]);
                }
                FitBasis::Isotropic => rows.push(s.f * (s.x * s.x + s.y * s.y)),
            }
        }
        Ok(Self {
            basis,
            responses,
            rows,
            samples,
        })
    }

    pub fn basis(&self) -> FitBasis {
        self.basis
    }

    pub fn columns(&self) -> usize {
        self.basis.columns()
    }

    /// Number of equations `L`.
    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn row(&self, l: usize) -> &[f64] {
        let c = self.columns();
        &self.rows[l * c..(l + 1) * c]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.rows
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Mean squared residual `||A - B c||^2 / L` for an arbitrary `c`.
    pub fn residual(&self, coeffs: &[f64]) -> f64 {
        let sum: f64 = (0..self.len())
            .map(|l| {
                let fit: f64 = self.row(l).iter().zip(coeffs).map(|(b, c)| b * c).sum();
                let e = self.responses[l] - fit;
                e * e
            })
            .sum();
        sum / self.len() as f64
    }
}

/// Anisotropic design system from every patch pixel with `f > threshold`.
pub fn log_linearize(patch: &Patch, threshold: f64) -> Result<DesignSystem> {
    log_linearize_with_basis(patch, threshold, FitBasis::Anisotropic)
}

pub fn log_linearize_with_basis(
    patch: &Patch,
    threshold: f64,
    basis: FitBasis,
) -> Result<DesignSystem> {
    if !(threshold > 0.0) {
        return invalid(format!("inclusion threshold must be > 0, got {threshold}"));
    }
    let mut samples = Vec::with_capacity(patch.values.len());
    for j in 0..patch.side {
        for i in 0..patch.side {
            let f = patch.get(i, j);
            if f > threshold {
                let (x, y) = patch.local(i, j);
                samples.push(Sample { x, y, f });
            }
        }
    }
    DesignSystem::from_samples(samples, basis)
}
