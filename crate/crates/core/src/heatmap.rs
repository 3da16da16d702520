//! Heatmap grids, Gaussian ground truth, coarse peaks and search patches.
//!
//! Pixel `(x, y)` is the lattice point itself: `x` indexes columns, `y` rows,
//! and there is no half-pixel offset. Storage is row-major.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HsrError, Result};

/// Epsilon added to every cell before normalizing a heatmap to a distribution.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// A real-valued landmark position in heatmap pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Landmark {
    pub u: f64,
    pub v: f64,
}

impl Landmark {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &Landmark) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }

    pub fn squared_distance(&self, other: &Landmark) -> f64 {
        let du = self.u - other.u;
        let dv = self.v - other.v;
        du * du + dv * dv
    }
}

/// An ordered set of landmarks for one face (or one synthetic image).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShapeSet {
    pub landmarks: Vec<Landmark>,
}

impl ShapeSet {
    pub fn new(landmarks: Vec<Landmark>) -> Result<Self> {
        if landmarks.is_empty() {
            return invalid("shape set needs at least one landmark");
        }
        Ok(Self { landmarks })
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }
}

impl From<Landmark> for ShapeSet {
    fn from(l: Landmark) -> Self {
        Self { landmarks: vec![l] }
    }
}

/// A `width x height` grid of confidences for a single landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return invalid(format!("heatmap size {width}x{height} is empty"));
        }
        if values.len() != width * height {
            return invalid(format!(
                "heatmap {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value at index {i}"));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Heatmap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn transposed(&self) -> Heatmap {
        let mut values = Vec::with_capacity(self.values.len());
        for x in 0..self.width {
            for y in 0..self.height {
                values.push(self.get(x, y));
            }
        }
        Heatmap {
            width: self.height,
            height: self.width,
            values,
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Ground-truth heatmap `exp(-((x-u)^2 + (y-v)^2) / (2 sigma^2))` sampled on
/// the integer lattice.
pub fn generate_gt_heatmap(
    center: Landmark,
    sigma_star: f64,
    width: usize,
    height: usize,
) -> Result<Heatmap> {
    if !(sigma_star > 0.0 && sigma_star.is_finite()) {
        return invalid(format!("sigma must be positive, got {sigma_star}"));
    }
    if width == 0 || height == 0 {
        return invalid(format!("heatmap size {width}x{height} is empty"));
    }
    if !(center.u.is_finite() && center.v.is_finite()) {
        return invalid("landmark must be finite");
    }
    let denom = 2.0 * sigma_star * sigma_star;
    let mut values = Vec::with_capacity(width * height);
    for y in 0..height {
        let dy = y as f64 - center.v;
        for x in 0..width {
            let dx = x as f64 - center.u;
            values.push((-(dx * dx + dy * dy) / denom).exp());
        }
    }
    Heatmap::new(width, height, values)
}

/// The integer argmax of a heatmap (the "suboptimal" landmark).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: usize,
    pub y: usize,
    pub value: f64,
    /// Another cell shares the maximum; the lowest row-major index won.
    pub tied: bool,
    /// Every cell holds the same value.
    pub flat: bool,
}

impl Peak {
    pub fn landmark(&self) -> Landmark {
        Landmark::new(self.x as f64, self.y as f64)
    }

    pub fn is_ambiguous(&self) -> bool {
        self.tied
    }
}

pub fn argmax_peak(h: &Heatmap) -> Peak {
    let mut best = 0;
    let mut ties = 0usize;
    let mut min = h.values[0];
    for (i, &v) in h.values.iter().enumerate().skip(1) {
        min = min.min(v);
        if v > h.values[best] {
            best = i;
            ties = 0;
        } else if v == h.values[best] {
            ties += 1;
        }
    }
    let value = h.values[best];
    Peak {
        x: best % h.width,
        y: best / h.width,
        value,
        tied: ties > 0,
        flat: min == value,
    }
}

/// An odd-sided square window of a parent heatmap.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub origin_x: usize,
    pub origin_y: usize,
    pub side: usize,
    /// The pixel the window was requested around, in parent coordinates.
    pub center_x: usize,
    pub center_y: usize,
    pub values: Vec<f64>,
}

impl Patch {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.side + i]
    }

    /// Coordinates of patch cell `(i, j)` relative to the center pixel.
    #[inline]
    pub fn local(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (self.origin_x + i) as f64 - self.center_x as f64,
            (self.origin_y + j) as f64 - self.center_y as f64,
        )
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Cut a `side x side` window centered on `(cx, cy)`. Windows that would
/// cross the border are shifted back inside the grid; the requested center
/// is kept so local coordinates stay anchored to it.
pub fn extract_patch(h: &Heatmap, cx: usize, cy: usize, side: usize) -> Result<Patch> {
    if side < 3 || side.is_multiple_of(2) {
        return invalid(format!("patch side must be odd and >= 3, got {side}"));
    }
    if side > h.width || side > h.height {
        return invalid(format!(
            "patch side {side} exceeds heatmap {}x{}",
            h.width, h.height
        ));
    }
    if cx >= h.width || cy >= h.height {
        return invalid(format!("center ({cx}, {cy}) lies outside the heatmap"));
    }
    let half = side / 2;
    let origin_x = cx.saturating_sub(half).min(h.width - side);
    let origin_y = cy.saturating_sub(half).min(h.height - side);
    let mut values = Vec::with_capacity(side * side);
    for j in 0..side {
        let row = (origin_y + j) * h.width;
        values.extend_from_slice(&h.values[row + origin_x..row + origin_x + side]);
    }
    Ok(Patch {
        origin_x,
        origin_y,
        side,
        center_x: cx,
        center_y: cy,
        values,
    })
}

/// Scale a heatmap coordinate to image coordinates with a uniform stride.
pub fn map_to_image(p: Landmark, heatmap_size: usize, image_size: usize) -> Result<Landmark> {
    if heatmap_size == 0 || image_size == 0 {
        return invalid("heatmap and image sizes must be >= 1");
    }
    let scale = image_size as f64 / heatmap_size as f64;
    Ok(Landmark::new(p.u * scale, p.v * scale))
}

/// A heatmap rescaled to a discrete probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub distribution: Heatmap,
    /// Number of negative cells clipped to zero before normalizing.
    pub clipped: usize,
}

/// Clip negatives to zero, add `epsilon` to every cell and rescale to sum 1.
pub fn normalize_to_distribution(h: &Heatmap, epsilon: f64) -> Result<Normalized> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return invalid(format!("epsilon must be >= 0, got {epsilon}"));
    }
    let mut clipped = 0;
    let mut values: Vec<f64> = h
        .values
        .iter()
        .map(|&v| {
            if v < 0.0 {
                clipped += 1;
                epsilon
            } else {
                v + epsilon
            }
        })
        .collect();
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(HsrError::DegenerateDistribution(
            "heatmap has no positive mass".into(),
        ));
    }
    values.iter_mut().for_each(|v| *v /= total);
    Ok(Normalized {
        distribution: Heatmap {
            width: h.width,
            height: h.height,
            values,
        },
        clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gt(u: f64, v: f64, sigma: f64) -> Heatmap {
        generate_gt_heatmap(Landmark::new(u, v), sigma, 64, 64).unwrap()
    }

    #[test]
    fn gt_heatmap_examples() {
        let h = gt(24.0, 24.0, 3.0);
        assert_eq!(h.get(24, 24), 1.0);
        assert!((h.get(27, 24) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((h.get(27, 24) - 0.60653).abs() < 1e-5);
        let p = argmax_peak(&gt(24.2, 23.8, 3.0));
        assert_eq!((p.x, p.y), (24, 24));
        assert!(!p.tied);
    }

    #[test]
    fn gt_heatmap_max_is_one_only_on_lattice() {
        assert!(gt(24.2, 23.8, 3.0).values().iter().all(|&v| v < 1.0));
        assert!(gt(24.0, 23.0, 3.0).values().contains(&1.0));
        assert!(gt(24.2, 23.8, 3.0)
            .values()
            .iter()
            .all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn gt_heatmap_rejects_bad_arguments() {
        let c = Landmark::new(1.0, 1.0);
        assert!(generate_gt_heatmap(c, 0.0, 8, 8).is_err());
        assert!(generate_gt_heatmap(c, -1.0, 8, 8).is_err());
        assert!(generate_gt_heatmap(c, 3.0, 0, 8).is_err());
        assert!(generate_gt_heatmap(c, 3.0, 8, 0).is_err());
    }

    #[test]
    fn gt_heatmap_transpose_symmetry() {
        let a = generate_gt_heatmap(Landmark::new(5.3, 9.7), 2.5, 13, 17).unwrap();
        let b = generate_gt_heatmap(Landmark::new(9.7, 5.3), 2.5, 17, 13).unwrap();
        assert_eq!(a.transposed(), b);
    }

    #[test]
    fn argmax_is_nearest_pixel_over_lattice() {
        for i in 0..=20 {
            for j in 0..=20 {
                let u = 23.5 + 0.05 * i as f64;
                let v = 23.5 + 0.05 * j as f64;
                let p = argmax_peak(&gt(u, v, 3.0));
                // Nearest pixel with exact halves resolved to the lower
                // index, which is what row-major order yields here.
                let nearest = |c: f64| {
                    let lo = c.floor();
                    if c - lo <= 0.5 {
                        lo as usize
                    } else {
                        lo as usize + 1
                    }
                };
                assert_eq!((p.x, p.y), (nearest(u), nearest(v)), "center ({u}, {v})");
            }
        }
    }

    #[test]
    fn argmax_flat_heatmap_is_ambiguous() {
        let h = Heatmap::filled(5, 4, 0.5).unwrap();
        let p = argmax_peak(&h);
        assert_eq!((p.x, p.y), (0, 0));
        assert!(p.tied && p.flat && p.is_ambiguous());
    }

    #[test]
    fn argmax_single_cell() {
        let h = Heatmap::new(1, 1, vec![0.3]).unwrap();
        let p = argmax_peak(&h);
        assert_eq!((p.x, p.y, p.tied), (0, 0, false));
    }

    #[test]
    fn patch_origins() {
        let h = gt(24.0, 24.0, 3.0);
        let p = extract_patch(&h, 24, 24, 9).unwrap();
        assert_eq!((p.origin_x, p.origin_y), (20, 20));
        let p = extract_patch(&h, 1, 1, 9).unwrap();
        assert_eq!((p.origin_x, p.origin_y), (0, 0));
        assert_eq!((p.center_x, p.center_y), (1, 1));
        assert_eq!(p.local(0, 0), (-1.0, -1.0));
        let p = extract_patch(&h, 24, 24, 15).unwrap();
        assert_eq!((p.origin_x, p.origin_y), (17, 17));
        let p = extract_patch(&h, 63, 62, 9).unwrap();
        assert_eq!((p.origin_x, p.origin_y), (55, 55));
    }

    #[test]
    fn patch_errors() {
        let h = Heatmap::filled(8, 12, 0.0).unwrap();
        assert!(extract_patch(&h, 4, 4, 9).is_err());
        assert!(extract_patch(&h, 4, 4, 4).is_err());
        assert!(extract_patch(&h, 4, 4, 1).is_err());
        assert!(extract_patch(&h, 8, 4, 3).is_err());
    }

    #[test]
    fn patch_matches_parent_exhaustively() {
        let values: Vec<f64> = (0..11 * 9).map(|i| i as f64 * 0.37).collect();
        let h = Heatmap::new(11, 9, values).unwrap();
        for side in [3, 5, 7, 9] {
            for cy in 0..9 {
                for cx in 0..11 {
                    let p = extract_patch(&h, cx, cy, side).unwrap();
                    assert!(p.origin_x + side <= 11 && p.origin_y + side <= 9);
                    for j in 0..side {
                        for i in 0..side {
                            assert_eq!(p.get(i, j), h.get(p.origin_x + i, p.origin_y + j));
                        }
                    }
                    let half = side / 2;
                    if cx >= half && cx + half < 11 && cy >= half && cy + half < 9 {
                        assert_eq!((p.origin_x + half, p.origin_y + half), (cx, cy));
                    }
                }
            }
        }
    }

    #[test]
    fn map_to_image_examples() {
        let p = map_to_image(Landmark::new(24.2, 23.8), 64, 256).unwrap();
        assert!((p.u - 96.8).abs() < 1e-12 && (p.v - 95.2).abs() < 1e-12);
        assert_eq!(
            map_to_image(Landmark::new(0.0, 0.0), 17, 300).unwrap(),
            Landmark::new(0.0, 0.0)
        );
        assert_eq!(
            map_to_image(Landmark::new(24.0, 24.0), 64, 64).unwrap(),
            Landmark::new(24.0, 24.0)
        );
        assert!(map_to_image(Landmark::default(), 0, 64).is_err());
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_to_distribution(&Heatmap::filled(2, 2, 0.5).unwrap(), 0.0).unwrap();
        assert!(n.distribution.values().iter().all(|&v| v == 0.25));
        let n = normalize_to_distribution(&gt(24.0, 24.0, 3.0), 0.0).unwrap();
        assert!((n.distribution.sum() - 1.0).abs() < 1e-12);
        let n = normalize_to_distribution(&Heatmap::filled(2, 2, 0.0).unwrap(), 1e-6).unwrap();
        assert!(n.distribution.values().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn normalize_degenerate_and_clipping() {
        let zero = Heatmap::filled(2, 2, 0.0).unwrap();
        assert!(matches!(
            normalize_to_distribution(&zero, 0.0),
            Err(HsrError::DegenerateDistribution(_))
        ));
        let h = Heatmap::new(2, 1, vec![-1.0, 2.0]).unwrap();
        let n = normalize_to_distribution(&h, 0.0).unwrap();
        assert_eq!(n.clipped, 1);
        assert_eq!(n.distribution.values(), &[0.0, 1.0]);
    }

    #[test]
    fn heatmap_rejects_non_finite() {
        assert!(Heatmap::new(2, 1, vec![1.0, f64::NAN]).is_err());
        assert!(Heatmap::new(2, 1, vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn normalized_sums_to_one(
            values in proptest::collection::vec(-0.5f64..10.0, 1..400),
            eps in prop_oneof![Just(0.0), Just(DEFAULT_EPSILON), 1e-9f64..1e-3],
        ) {
            let n = values.len();
            let mut values = values;
            values[0] = values[0].abs() + 0.1;
            let h = Heatmap::new(n, 1, values).unwrap();
            let d = normalize_to_distribution(&h, eps).unwrap();
            prop_assert!((d.distribution.sum() - 1.0).abs() < 1e-12);
            prop_assert!(d.distribution.values().iter().all(|&v| v >= 0.0));
        }
    }
}
