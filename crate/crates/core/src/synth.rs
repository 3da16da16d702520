//! Seeded synthetic heatmap corpora and the argmax-vs-fit benchmark.
//!
//! # Random streams
//!
//! Every plane owns an independent ChaCha8 stream: the generator is seeded
//! with `ChaCha8Rng::seed_from_u64(seed)` and then switched to stream number
//! `plane_index` via `set_stream`. Within a plane the draws are, in order:
//!
//! 1. integer center column, then row: `margin + floor(u * (size - 2 margin))`
//! 2. subpixel offsets along x, then y: `u - 0.5`, so in `[-0.5, 0.5)`
//! 3. if `noise_sigma > 0`, one standard normal per pixel in row-major order,
//!    produced in pairs by the Box-Muller transform
//!    `sqrt(-2 ln(1 - u1)) * (cos, sin)(2 pi u2)`
//!
//! where `u` is a 53-bit uniform in `[0, 1)`. Because streams are split per
//! plane, serial and parallel generation produce identical bytes.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, HsrError, Result};
use crate::heatmap::{argmax_peak, Heatmap, Landmark};
use crate::io::{quantize_f32, write_hmap_file, Manifest, PlaneEntry, MANIFEST_VERSION};
use crate::metrics::{format_sig9, mean_std};
use crate::subpixel::{subpixel_refine, FitMode};

/// Centers are kept this many pixels away from every border.
pub const CORPUS_MARGIN: usize = 8;

/// One-sided exponential smear of the peak along a direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    /// Direction of the smear in degrees, counter-clockwise from +x.
    pub direction_deg: f64,
    /// Decay length in pixels along the smear direction.
    pub decay: f64,
}

/// A secondary Gaussian added on top of the primary one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleCentroidSpec {
    /// Amplitude of the secondary peak relative to the primary, in `[0, 1)`.
    pub ratio: f64,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    /// Standard deviation of additive i.i.d. Gaussian noise, as a fraction of
    /// the unit peak.
    pub noise_sigma: f64,
    #[serde(default)]
    pub tail: Option<TailSpec>,
    #[serde(default)]
    pub double_centroid: Option<DoubleCentroidSpec>,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn clean(seed: u64) -> Self {
        Self {
            noise_sigma: 0.0,
            tail: None,
            double_centroid: None,
            seed,
        }
    }

    pub fn with_noise(noise_sigma: f64, seed: u64) -> Self {
        Self {
            noise_sigma,
            ..Self::clean(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return invalid(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            ));
        }
        if let Some(t) = &self.tail {
            if !(t.decay > 0.0 && t.decay.is_finite()) || !t.direction_deg.is_finite() {
                return invalid(format!("tail decay must be > 0, got {}", t.decay));
            }
        }
        if let Some(d) = &self.double_centroid {
            if !(0.0..1.0).contains(&d.ratio) {
                return invalid(format!(
                    "double-centroid ratio must be in [0, 1), got {}",
                    d.ratio
                ));
            }
            if !(d.dx.is_finite() && d.dy.is_finite()) {
                return invalid("double-centroid offset must be finite");
            }
        }
        Ok(())
    }
}

/// Per-plane generator positioned on the plane's own stream.
pub fn plane_rng(seed: u64, plane: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(plane as u64);
    rng
}

fn standard_normals(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    while out.len() < count {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * PI * u2;
        out.push(r * theta.cos());
        out.push(r * theta.sin());
    }
    out.truncate(count);
    out
}

/// Render one corrupted heatmap around `center`. `normals` supplies the
/// per-pixel noise draws when `spec.noise_sigma > 0`.
pub fn render_plane(
    center: Landmark,
    sigma_star: f64,
    size: usize,
    spec: &CorruptionSpec,
    normals: &[f64],
) -> Result<Heatmap> {
    let denom = 2.0 * sigma_star * sigma_star;
    let tail_dir = spec.tail.map(|t| {
        let a = t.direction_deg.to_radians();
        (a.cos(), a.sin(), t.decay)
    });
    let mut values = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let dx = x as f64 - center.u;
            let dy = y as f64 - center.v;
            let mut f = (-(dx * dx + dy * dy) / denom).exp();
            if let Some((cx, cy, decay)) = tail_dir {
                let along = dx * cx + dy * cy;
                if along > 0.0 {
                    let across = -dx * cy + dy * cx;
                    f = f.max((-along / decay - across * across / denom).exp());
                }
            }
            if let Some(d) = &spec.double_centroid {
                let ex = dx - d.dx;
                let ey = dy - d.dy;
                f += d.ratio * (-(ex * ex + ey * ey) / denom).exp();
            }
            values.push(f);
        }
    }
    if spec.noise_sigma > 0.0 {
        for (v, n) in values.iter_mut().zip(normals) {
            *v += spec.noise_sigma * n;
        }
    }
    Heatmap::new(size, size, values)
}

/// Planes (already at `f32` storage precision) plus their manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub planes: Vec<Heatmap>,
    pub manifest: Manifest,
}

impl Corpus {
    pub fn write(&self, hmap_path: &Path, manifest_path: &Path) -> Result<()> {
        write_hmap_file(hmap_path, &self.planes)?;
        self.manifest.save(manifest_path)
    }
}

pub fn generate_corpus(
    count: usize,
    sigma_star: f64,
    size: usize,
    spec: &CorruptionSpec,
) -> Result<Corpus> {
    if count == 0 {
        return invalid("corpus needs at least one plane");
    }
    if !(sigma_star > 0.0 && sigma_star.is_finite()) {
        return invalid(format!("sigma must be positive, got {sigma_star}"));
    }
    if size < 2 * CORPUS_MARGIN + 1 {
        return invalid(format!(
            "heatmap size must be at least {}, got {size}",
            2 * CORPUS_MARGIN + 1
        ));
    }
    spec.validate()?;

    let span = (size - 2 * CORPUS_MARGIN) as f64;
    let generated: Vec<(Heatmap, PlaneEntry)> = (0..count)
        .into_par_iter()
        .map(|index| {
            let mut rng = plane_rng(spec.seed, index);
            let px = CORPUS_MARGIN as f64 + (rng.random::<f64>() * span).floor();
            let py = CORPUS_MARGIN as f64 + (rng.random::<f64>() * span).floor();
            let ox = rng.random::<f64>() - 0.5;
            let oy = rng.random::<f64>() - 0.5;
            let center = Landmark::new(px + ox, py + oy);
            let normals = if spec.noise_sigma > 0.0 {
                standard_normals(&mut rng, size * size)
            } else {
                Vec::new()
            };
            let plane = render_plane(center, sigma_star, size, spec, &normals)?;
            Ok((
                quantize_f32(&plane),
                PlaneEntry {
                    index,
                    u_true: center.u,
                    v_true: center.v,
                    norm_constant: Some(size as f64),
                    sigma_star: None,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let (planes, entries) = generated.into_iter().unzip();
    Ok(Corpus {
        planes,
        manifest: Manifest {
            version: MANIFEST_VERSION,
            sigma_star,
            size,
            spec: Some(*spec),
            planes: entries,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Argmax,
    SdtUnconstrained,
    SdtConstrained,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::Argmax,
        Method::SdtUnconstrained,
        Method::SdtConstrained,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Argmax => "argmax",
            Method::SdtUnconstrained => "sdt-unconstrained",
            Method::SdtConstrained => "sdt-constrained",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = HsrError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HsrError::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Predicted landmark for one plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneOutcome {
    pub center: Landmark,
    pub fallback: bool,
}

pub fn predict(h: &Heatmap, method: Method, sigma_star: f64, side: usize) -> PlaneOutcome {
    let mode = match method {
        Method::Argmax => {
            return PlaneOutcome {
                center: argmax_peak(h).landmark(),
                fallback: false,
            }
        }
        Method::SdtUnconstrained => FitMode::Unconstrained,
        Method::SdtConstrained => FitMode::Constrained,
    };
    let r = subpixel_refine(h, mode, sigma_star, side);
    PlaneOutcome {
        center: r.center,
        fallback: r.is_fallback(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub method: Method,
    /// Mean absolute error per axis, in heatmap pixels.
    pub mean_abs_err_px: f64,
    pub mean_nme: f64,
    /// Population standard deviation of the per-plane NME.
    pub std_nme: f64,
    pub fallback_rate: f64,
    pub planes: usize,
}

impl BenchResult {
    pub const CSV_HEADER: &'static str =
        "method,mean_abs_err_px,mean_nme,std_nme,fallback_rate,planes";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.method.as_str(),
            format_sig9(self.mean_abs_err_px),
            format_sig9(self.mean_nme),
            format_sig9(self.std_nme),
            format_sig9(self.fallback_rate),
            self.planes
        )
    }
}

pub fn write_bench_csv<W: Write>(mut w: W, results: &[BenchResult]) -> std::io::Result<()> {
    writeln!(w, "{}", BenchResult::CSV_HEADER)?;
    for r in results {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Predictions for every plane, in plane order.
pub fn evaluate_method(
    planes: &[Heatmap],
    manifest: &Manifest,
    method: Method,
    side: usize,
) -> Vec<PlaneOutcome> {
    planes
        .par_iter()
        .enumerate()
        .map(|(i, h)| predict(h, method, manifest.sigma_for(i), side))
        .collect()
}

/// Aggregate per-plane outcomes. Planes without a normalization constant are
/// normalized by the manifest's heatmap size.
pub fn summarize_outcomes(
    method: Method,
    outcomes: &[PlaneOutcome],
    manifest: &Manifest,
) -> Result<BenchResult> {
    if outcomes.is_empty() || outcomes.len() != manifest.planes.len() {
        return invalid(format!(
            "{} outcomes for {} manifest planes",
            outcomes.len(),
            manifest.planes.len()
        ));
    }
    let n = outcomes.len() as f64;
    let mut abs_sum = 0.0;
    let mut fallbacks = 0usize;
    let mut nmes = Vec::with_capacity(outcomes.len());
    for (o, entry) in outcomes.iter().zip(&manifest.planes) {
        let truth = entry.truth();
        abs_sum += (o.center.u - truth.u).abs() + (o.center.v - truth.v).abs();
        let norm = entry.norm_constant.unwrap_or(manifest.size as f64);
        if !(norm > 0.0) {
            return invalid(format!(
                "plane {} has a non-positive norm constant",
                entry.index
            ));
        }
        nmes.push(o.center.distance(&truth) / norm);
        fallbacks += o.fallback as usize;
    }
    let (mean_nme, std_nme) = mean_std(&nmes);
    Ok(BenchResult {
        method,
        mean_abs_err_px: abs_sum / (2.0 * n),
        mean_nme,
        std_nme,
        fallback_rate: fallbacks as f64 / n,
        planes: outcomes.len(),
    })
}

pub fn run_benchmark(
    planes: &[Heatmap],
    manifest: &Manifest,
    methods: &[Method],
    side: usize,
) -> Result<Vec<BenchResult>> {
    manifest.validate_against(planes)?;
    if side < 3 || side.is_multiple_of(2) {
        return invalid(format!("patch side must be odd and >= 3, got {side}"));
    }
    if planes.is_empty() {
        return invalid("corpus has no planes");
    }
    methods
        .iter()
        .map(|&m| summarize_outcomes(m, &evaluate_method(planes, manifest, m, side), manifest))
        .collect()
}
