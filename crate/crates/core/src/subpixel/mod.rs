//! Subpixel peak recovery by closed-form Gaussian surface fitting.
//!
//! [`subpixel_refine`] runs the whole chain: argmax pixel, search patch,
//! log-linearized design system, QR solve and parameter extraction. Any
//! failure along the way degrades to the argmax pixel with the cause kept in
//! the report, so the function never errors.

pub mod design;
pub mod extract;
pub mod qr;

use serde::{Deserialize, Serialize};

use crate::error::HsrError;
use crate::heatmap::{argmax_peak, extract_patch, Heatmap, Landmark, Peak};

pub use design::{log_linearize, log_linearize_with_basis, DesignSystem, FitBasis, Sample};
pub use extract::{
    extract_constrained, extract_unconstrained, ConstrainedBranch, ConstrainedExtraction,
    GaussianParams,
};
pub use qr::{householder_solve, solve_least_squares_qr, LeastSquares};

/// Pixels at or below this fraction of the patch maximum are left out of the
/// fit.
pub const INCLUSION_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    /// Free amplitude and per-axis spread.
    Unconstrained,
    /// `G = 1` and a shared spread, recovered with the `c1` sign split.
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitBranch {
    Unconstrained,
    ConstrainedC1Nonneg,
    ConstrainedC1Neg,
    FallbackArgmax,
}

impl FitBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            FitBranch::Unconstrained => "unconstrained",
            FitBranch::ConstrainedC1Nonneg => "constrained-c1-nonneg",
            FitBranch::ConstrainedC1Neg => "constrained-c1-neg",
            FitBranch::FallbackArgmax => "fallback-argmax",
        }
    }
}

/// Why a fit fell back to the argmax pixel, or a non-fatal note on a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitIssue {
    AmbiguousPeak,
    InvalidPatch,
    InsufficientSupport,
    SingularSystem,
    NonConcave,
    OffsetOutOfRange,
    NonFinite,
    InvalidSigma,
    IndeterminateScale,
}

impl FitIssue {
    pub fn as_str(self) -> &'static str {
        match self {
            FitIssue::AmbiguousPeak => "ambiguous-peak",
            FitIssue::InvalidPatch => "invalid-patch",
            FitIssue::InsufficientSupport => "insufficient-support",
            FitIssue::SingularSystem => "singular-system",
            FitIssue::NonConcave => "non-concave",
            FitIssue::OffsetOutOfRange => "offset-out-of-range",
            FitIssue::NonFinite => "non-finite",
            FitIssue::InvalidSigma => "invalid-sigma",
            FitIssue::IndeterminateScale => "indeterminate-scale",
        }
    }
}

impl From<&HsrError> for FitIssue {
    fn from(e: &HsrError) -> Self {
        match e {
            HsrError::InsufficientSupport { .. } => FitIssue::InsufficientSupport,
            HsrError::SingularSystem { .. } => FitIssue::SingularSystem,
            HsrError::NonConcaveFit { .. } => FitIssue::NonConcave,
            _ => FitIssue::InvalidPatch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Solved coefficients; empty when no solve happened.
    pub coeffs: Vec<f64>,
    /// Gaussian parameters in patch-local coordinates.
    pub params: Option<GaussianParams>,
    pub branch: FitBranch,
    /// Mean squared log-linear residual; 0 when no solve happened.
    pub residual: f64,
    /// Recovered landmark in parent-heatmap coordinates.
    pub center: Landmark,
    /// The integer argmax pixel the patch was centered on.
    pub suboptimal: Landmark,
    pub cause: Option<FitIssue>,
}

impl FitReport {
    pub fn is_fallback(&self) -> bool {
        self.branch == FitBranch::FallbackArgmax
    }

    fn fallback(peak: &Peak, cause: FitIssue, coeffs: Vec<f64>, residual: f64) -> Self {
        Self {
            coeffs,
            params: None,
            branch: FitBranch::FallbackArgmax,
            residual,
            center: peak.landmark(),
            suboptimal: peak.landmark(),
            cause: Some(cause),
        }
    }
}

/// Refine the argmax of `h` to a subpixel landmark.
pub fn subpixel_refine(h: &Heatmap, mode: FitMode, sigma_star: f64, side: usize) -> FitReport {
    let peak = argmax_peak(h);
    if peak.flat {
        return FitReport::fallback(&peak, FitIssue::AmbiguousPeak, Vec::new(), 0.0);
    }
    if mode == FitMode::Constrained && !(sigma_star > 0.0 && sigma_star.is_finite()) {
        return FitReport::fallback(&peak, FitIssue::InvalidSigma, Vec::new(), 0.0);
    }
    let patch = match extract_patch(h, peak.x, peak.y, side) {
        Ok(p) => p,
        Err(_) => return FitReport::fallback(&peak, FitIssue::InvalidPatch, Vec::new(), 0.0),
    };
    let threshold = INCLUSION_RATIO * patch.max();
    if !(threshold > 0.0) {
        return FitReport::fallback(&peak, FitIssue::InsufficientSupport, Vec::new(), 0.0);
    }
    let basis = match mode {
        FitMode::Unconstrained => FitBasis::Anisotropic,
        FitMode::Constrained => FitBasis::Isotropic,
    };
    let solved = log_linearize_with_basis(&patch, threshold, basis)
        .and_then(|sys| solve_least_squares_qr(&sys));
    let ls = match solved {
        Ok(ls) => ls,
        Err(e) => return FitReport::fallback(&peak, FitIssue::from(&e), Vec::new(), 0.0),
    };

    let extracted = match mode {
        FitMode::Unconstrained => {
            let c: [f64; 5] = ls.coeffs.as_slice().try_into().expect("five coefficients");
            extract_unconstrained(&c).map(|p| (p, FitBranch::Unconstrained, None))
        }
        FitMode::Constrained => {
            let c: [f64; 4] = ls.coeffs.as_slice().try_into().expect("four coefficients");
            extract_constrained(&c, sigma_star).map(|e| {
                let branch = match e.branch {
                    ConstrainedBranch::C1NonNegative => FitBranch::ConstrainedC1Nonneg,
                    ConstrainedBranch::C1Negative => FitBranch::ConstrainedC1Neg,
                };
                let note = e
                    .indeterminate_scale
                    .then_some(FitIssue::IndeterminateScale);
                (e.params, branch, note)
            })
        }
    };
    let (params, branch, note) = match extracted {
        Ok(x) => x,
        Err(e) => return FitReport::fallback(&peak, FitIssue::from(&e), ls.coeffs, ls.residual),
    };

    if !(params.u.is_finite() && params.v.is_finite()) {
        return FitReport::fallback(&peak, FitIssue::NonFinite, ls.coeffs, ls.residual);
    }
    if params.u.hypot(params.v) > side as f64 / 2.0 {
        return FitReport::fallback(&peak, FitIssue::OffsetOutOfRange, ls.coeffs, ls.residual);
    }

    FitReport {
        coeffs: ls.coeffs,
        params: Some(params),
        branch,
        residual: ls.residual,
        center: Landmark::new(peak.x as f64 + params.u, peak.y as f64 + params.v),
        suboptimal: peak.landmark(),
        cause: note,
    }
}
