//! Heatmap subpixel landmark localization.
//!
//! The crate covers the full numerical path from a landmark heatmap to a
//! subpixel coordinate:
//!
//! * [`heatmap`]: Gaussian ground-truth synthesis, argmax peaks, patches.
//! * [`divergence`]: MSE, KL, Jensen-Shannon and the composite detection loss.
//! * [`subpixel`]: closed-form weighted log-linear Gaussian surface fitting
//!   solved with a Householder QR decomposition.
//! * [`mcg`]: the multi-order cross attention block with analytic gradients.
//! * [`metrics`]: NME, failure rate and CED curves.
//! * [`synth`]: seeded synthetic corpora and the argmax-vs-fit benchmark.
//! * [`io`]: the `HMAP` plane container and its JSON manifest.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divergence;
pub mod error;
pub mod gradcheck;
pub mod heatmap;
pub mod io;
pub mod mcg;
pub mod metrics;
pub mod subpixel;
pub mod synth;

pub use divergence::{js_div, kl_div, mse_loss, subpixel_detection_loss, LossBreakdown};
pub use error::{HsrError, Result};
pub use heatmap::{Heatmap, Landmark, Patch, Peak, ShapeSet};
pub use io::{Manifest, PlaneEntry};
pub use mcg::{FeatureMap, McgGradients, McgState};
pub use metrics::{CedCurve, EvalRecord};
pub use subpixel::{FitBranch, FitIssue, FitMode, FitReport, GaussianParams};
pub use synth::{BenchResult, Corpus, CorruptionSpec, Method};

/// Default ground-truth Gaussian standard deviation in heatmap pixels.
pub const DEFAULT_SIGMA_STAR: f64 = 3.0;
/// Default weight of the fine detection term in the composite loss.
pub const DEFAULT_LAMBDA: f64 = 1.0 / 16.0;
/// Default side of the search patch around the argmax pixel.
pub const DEFAULT_PATCH_SIDE: usize = 9;
/// Wider search patch used for degraded heatmaps.
pub const WIDE_PATCH_SIDE: usize = 15;
