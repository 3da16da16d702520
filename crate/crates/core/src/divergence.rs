//! Heatmap losses.
//!
//! All logarithms are natural, so the Jensen-Shannon divergence is bounded by
//! `ln 2`. Losses are plain sums over landmarks; averaging is left to callers.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::heatmap::{normalize_to_distribution, Heatmap, ShapeSet, DEFAULT_EPSILON};

/// Maximum deviation of a distribution's total mass from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub js_term: f64,
    pub fdl_term: f64,
    pub lambda: f64,
    pub total: f64,
}

fn check_same_shape(a: &Heatmap, b: &Heatmap) -> Result<()> {
    if !a.same_shape(b) {
        return invalid(format!(
            "heatmap shapes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        ));
    }
    Ok(())
}

fn check_distribution(p: &Heatmap, name: &str) -> Result<()> {
    if let Some(v) = p.values().iter().find(|&&v| v < 0.0) {
        return invalid(format!("{name} has a negative cell ({v})"));
    }
    let total = p.sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return invalid(format!("{name} is not normalized (sum = {total})"));
    }
    Ok(())
}

pub fn mse_loss(a: &Heatmap, b: &Heatmap) -> Result<f64> {
    check_same_shape(a, b)?;
    let sum: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.values().len() as f64)
}

// Cells with p = 0 contribute nothing (0 ln 0 = 0).
fn kl_sum(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return invalid(format!("q has no mass at cell {i} where p = {pi}"));
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total)
}

/// `KL(p || q) = sum p ln(p / q)` over all cells.
pub fn kl_div(p: &Heatmap, q: &Heatmap) -> Result<f64> {
    check_same_shape(p, q)?;
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    kl_sum(p.values(), q.values())
}

/// `JS(p || q) = KL(p || m) / 2 + KL(q || m) / 2` with `m = (p + q) / 2`.
///
/// Both halves are accumulated independently and then added, so swapping the
/// arguments yields a bit-identical result.
pub fn js_div(p: &Heatmap, q: &Heatmap) -> Result<f64> {
    check_same_shape(p, q)?;
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let m: Vec<f64> = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let kp = kl_sum(p.values(), &m)?;
    let kq = kl_sum(q.values(), &m)?;
    Ok(0.5 * (kp + kq))
}

/// Sum of squared Euclidean distances between matching landmarks.
pub fn fine_detection_loss(predicted: &ShapeSet, truth: &ShapeSet) -> Result<f64> {
    if predicted.len() != truth.len() {
        return invalid(format!(
            "landmark counts differ: {} vs {}",
            predicted.len(),
            truth.len()
        ));
    }
    Ok(predicted
        .landmarks
        .iter()
        .zip(&truth.landmarks)
        .map(|(p, t)| p.squared_distance(t))
        .sum())
}

/// Jensen-Shannon term over every (ground truth, generated) heatmap pair plus
/// `lambda` times the fine detection loss of the fitted landmarks.
///
/// Heatmaps are clipped, epsilon-floored with [`DEFAULT_EPSILON`] and
/// normalized before the divergence is taken.
pub fn subpixel_detection_loss(
    generated: &[Heatmap],
    ground_truth: &[Heatmap],
    predicted: &ShapeSet,
    truth: &ShapeSet,
    lambda: f64,
) -> Result<LossBreakdown> {
    subpixel_detection_loss_with_epsilon(
        generated,
        ground_truth,
        predicted,
        truth,
        lambda,
        DEFAULT_EPSILON,
    )
}

pub fn subpixel_detection_loss_with_epsilon(
    generated: &[Heatmap],
    ground_truth: &[Heatmap],
    predicted: &ShapeSet,
    truth: &ShapeSet,
    lambda: f64,
    epsilon: f64,
) -> Result<LossBreakdown> {
    if generated.len() != ground_truth.len() {
        return invalid(format!(
            "heatmap list lengths differ: {} vs {}",
            generated.len(),
            ground_truth.len()
        ));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return invalid(format!("lambda must be >= 0, got {lambda}"));
    }
    let mut js_term = 0.0;
    for (gen, gt) in generated.iter().zip(ground_truth) {
        let p = normalize_to_distribution(gt, epsilon)?.distribution;
        let q = normalize_to_distribution(gen, epsilon)?.distribution;
        js_term += js_div(&p, &q)?;
    }
    let fdl_term = fine_detection_loss(predicted, truth)?;
    Ok(LossBreakdown {
        js_term,
        fdl_term,
        lambda,
        total: js_term + lambda * fdl_term,
    })
}
