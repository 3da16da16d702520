use std::path::Path;

use anyhow::{bail, Context, Result};
use hsr_core::metrics::{ced_curve, summarize, Summary};
use hsr_core::{CedCurve, EvalRecord, Landmark, ShapeSet};
use serde::Serialize;

use crate::args::{EvalArgs, Format};
use crate::fit::read_records;
use crate::paths::{self, check_input, check_output, load_manifest};

#[derive(Serialize)]
struct EvalReport<'a> {
    #[serde(flatten)]
    summary: &'a Summary,
    ced: &'a CedCurve,
}

fn guess_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Csv,
    }
}

pub fn run(a: &EvalArgs) -> Result<()> {
    check_input(&a.fit)?;
    check_input(&a.manifest)?;
    for out in [&a.out, &a.ced_out].into_iter().flatten() {
        check_output(out, &[&a.fit, &a.manifest])?;
    }
    if a.ced_steps < 2 {
        bail!("--ced-steps must be >= 2, got {}", a.ced_steps);
    }

    let format = a.fit_format.unwrap_or_else(|| guess_format(&a.fit));
    let fits = read_records(&a.fit, format)
        .with_context(|| format!("cannot parse {}", a.fit.display()))?;
    let manifest = load_manifest(&a.manifest)?;
    if fits.len() != manifest.planes.len() {
        bail!(
            "fit output has {} records but the manifest lists {} planes",
            fits.len(),
            manifest.planes.len()
        );
    }

    let records = fits
        .iter()
        .zip(&manifest.planes)
        .map(|(fit, entry)| {
            if fit.plane != entry.index {
                bail!(
                    "fit record for plane {} lines up with manifest plane {}",
                    fit.plane,
                    entry.index
                );
            }
            let norm = entry.norm_constant.unwrap_or(manifest.size as f64);
            Ok(EvalRecord::new(
                ShapeSet::from(Landmark::new(fit.u, fit.v)),
                ShapeSet::from(entry.truth()),
                norm,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize(&a.name, &records, a.threshold)?;
    let ced = ced_curve(&records, a.ced_max, a.ced_steps)?;
    if let Some(path) = &a.ced_out {
        let mut buf = Vec::new();
        ced.write_csv(&mut buf)?;
        std::fs::write(path, buf).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let text = match a.format {
        Format::Csv => format!("{}\n{}\n", Summary::CSV_HEADER, summary.csv_row()),
        Format::Json => paths::to_json(&EvalReport {
            summary: &Summary {
                nme: paths::sig9(summary.nme),
                std: paths::sig9(summary.std),
                failure: paths::sig9(summary.failure),
                ..summary.clone()
            },
            ced: &CedCurve {
                thresholds: ced.thresholds.iter().map(|&t| paths::sig9(t)).collect(),
                fractions: ced.fractions.iter().map(|&f| paths::sig9(f)).collect(),
            },
        })?,
    };
    paths::write_output(a.out.as_deref(), &text)
}
