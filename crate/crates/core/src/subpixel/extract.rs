//! Gaussian parameters from solved log-linear coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HsrError, Result};

/// Below this value of `c2^2 + c3^2` the isotropic scale cannot be recovered.
pub const SCALE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    /// Peak confidence `G`.
    pub amplitude: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub u: f64,
    pub v: f64,
}

/// Invert `c = [c0, c1, c2, c3, c4]` of the anisotropic basis.
pub fn extract_unconstrained(c: &[f64; 5]) -> Result<GaussianParams> {
    let [c0, c1, c2, c3, c4] = *c;
    if !(c3 < 0.0 && c4 < 0.0) {
        return Err(HsrError::NonConcaveFit { c3, c4 });
    }
    let u = -c1 / (2.0 * c3);
    let v = -c2 / (2.0 * c4);
    let var_x = -1.0 / (2.0 * c3);
    let var_y = -1.0 / (2.0 * c4);
    let amplitude = (c0 + u * u / (2.0 * var_x) + v * v / (2.0 * var_y)).exp();
    Ok(GaussianParams {
        amplitude,
        sigma_x: var_x.sqrt(),
        sigma_y: var_y.sqrt(),
        u,
        v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstrainedBranch {
    /// `c1 >= 0`: the scale is pinned to `sigma_star`.
    C1NonNegative,
    /// `c1 < 0`: the scale is estimated from the coefficients.
    C1Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedExtraction {
    pub params: GaussianParams,
    pub branch: ConstrainedBranch,
    /// `c1 < 0` but `c2^2 + c3^2` vanished; the center was pinned to the
    /// local origin.
    pub indeterminate_scale: bool,
}

/// Invert the isotropic coefficients `[c1, c2, c3, c4]` (basis
/// `[f, xf, yf, (x^2 + y^2) f]`) under `G = 1`.
///
/// With `G = 1` the constant term is `c1 = -(u^2 + v^2) / (2 s^2)`, and
/// `c2 = u / s^2`, `c3 = v / s^2`, so `s^2 = -2 c1 / (c2^2 + c3^2)` whenever
/// `c1 < 0`. Otherwise `s` falls back to `sigma_star`. The quadratic
/// coefficient `c4` is not used.
pub fn extract_constrained(c: &[f64; 4], sigma_star: f64) -> Result<ConstrainedExtraction> {
    if !(sigma_star > 0.0 && sigma_star.is_finite()) {
        return invalid(format!("sigma_star must be positive, got {sigma_star}"));
    }
    let [c1, c2, c3, _] = *c;
    let pinned = sigma_star * sigma_star;
    let (variance, branch, indeterminate_scale) = if c1 >= 0.0 {
        (pinned, ConstrainedBranch::C1NonNegative, false)
    } else {
        let norm = c2 * c2 + c3 * c3;
        if norm < SCALE_TOLERANCE {
            (pinned, ConstrainedBranch::C1Negative, true)
        } else {
            (-2.0 * c1 / norm, ConstrainedBranch::C1Negative, false)
        }
    };
    let (u, v) = if indeterminate_scale {
        (0.0, 0.0)
    } else {
        (variance * c2, variance * c3)
    };
    let sigma = variance.sqrt();
    Ok(ConstrainedExtraction {
        params: GaussianParams {
            amplitude: 1.0,
            sigma_x: sigma,
            sigma_y: sigma,
            u,
            v,
        },
        branch,
        indeterminate_scale,
    })
}
