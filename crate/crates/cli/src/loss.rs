use anyhow::{Context, Result};
use hsr_core::heatmap::generate_gt_heatmap;
use hsr_core::metrics::format_sig9;
use hsr_core::subpixel::subpixel_refine;
use hsr_core::{subpixel_detection_loss, FitMode, LossBreakdown, ShapeSet};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Format, LossArgs};
use crate::paths::{
    self, check_input, check_output, default_manifest, load_manifest, load_planes, sig9,
};

#[derive(Serialize)]
struct LossReport {
    js_term: f64,
    fdl_term: f64,
    lambda: f64,
    total: f64,
    planes: usize,
}

pub fn run(a: &LossArgs) -> Result<()> {
    let manifest_path = a
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest(&a.input));
    check_input(&a.input)?;
    check_input(&manifest_path)?;
    if let Some(out) = &a.out {
        check_output(out, &[&a.input, &manifest_path])?;
    }
    let planes = load_planes(&a.input)?;
    let manifest = load_manifest(&manifest_path)?;
    manifest.validate_against(&planes).with_context(|| {
        format!(
            "{} does not match {}",
            manifest_path.display(),
            a.input.display()
        )
    })?;
    if planes.is_empty() {
        anyhow::bail!("corpus has no planes");
    }

    let mode = FitMode::from(a.mode);
    let per_plane = planes
        .par_iter()
        .zip(&manifest.planes)
        .enumerate()
        .map(|(i, (h, entry))| {
            let sigma = manifest.sigma_for(i);
            let gt = generate_gt_heatmap(entry.truth(), sigma, h.width(), h.height())?;
            let center = subpixel_refine(h, mode, sigma, a.side).center;
            Ok((gt, center))
        })
        .collect::<hsr_core::Result<Vec<_>>>()?;
    let (gts, centers): (Vec<_>, Vec<_>) = per_plane.into_iter().unzip();
    let truths = manifest.planes.iter().map(|e| e.truth()).collect();

    let LossBreakdown {
        js_term,
        fdl_term,
        lambda,
        total,
    } = subpixel_detection_loss(
        &planes,
        &gts,
        &ShapeSet::new(centers)?,
        &ShapeSet::new(truths)?,
        a.lambda,
    )?;
    let text = match a.format {
        Format::Csv => format!(
            "js_term,fdl_term,lambda,total,planes\n{},{},{},{},{}\n",
            format_sig9(js_term),
            format_sig9(fdl_term),
            format_sig9(lambda),
            format_sig9(total),
            planes.len()
        ),
        Format::Json => paths::to_json(&LossReport {
            js_term: sig9(js_term),
            fdl_term: sig9(fdl_term),
            lambda: sig9(lambda),
            total: sig9(total),
            planes: planes.len(),
        })?,
    };
    paths::write_output(a.out.as_deref(), &text)
}
