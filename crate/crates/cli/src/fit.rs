use std::path::Path;

use anyhow::Result;
use hsr_core::metrics::format_sig9;
use hsr_core::subpixel::subpixel_refine;
use hsr_core::{FitMode, DEFAULT_SIGMA_STAR};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{FitArgs, Format};
use crate::paths::{self, check_input, check_output, default_manifest, load_planes, sig9};

/// One fitted plane, as written by `fit` and read back by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub plane: usize,
    pub branch: String,
    pub u: f64,
    pub v: f64,
    pub residual: f64,
    /// Integer argmax pixel the fit started from.
    pub peak_x: f64,
    pub peak_y: f64,
    #[serde(default)]
    pub cause: Option<String>,
}

pub const CSV_HEADER: &str = "plane,branch,u,v,residual,peak_x,peak_y,cause";

impl FitRecord {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.plane,
            self.branch,
            format_sig9(self.u),
            format_sig9(self.v),
            format_sig9(self.residual),
            format_sig9(self.peak_x),
            format_sig9(self.peak_y),
            self.cause.as_deref().unwrap_or("")
        )
    }
}

fn render(records: &[FitRecord], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => paths::to_json(&records)?,
        Format::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for r in records {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
    })
}

fn sigma_from_manifest(input: &Path) -> Result<Option<Vec<f64>>> {
    let path = default_manifest(input);
    if !path.is_file() {
        return Ok(None);
    }
    let m = paths::load_manifest(&path)?;
    Ok(Some((0..m.planes.len()).map(|i| m.sigma_for(i)).collect()))
}

pub fn run(a: &FitArgs) -> Result<()> {
    check_input(&a.input)?;
    if let Some(out) = &a.out {
        check_output(out, &[&a.input])?;
    }
    let planes = load_planes(&a.input)?;
    let sigmas = match a.sigma {
        Some(_) => None,
        None => sigma_from_manifest(&a.input)?,
    };
    let fallback_sigma = a.sigma.unwrap_or(DEFAULT_SIGMA_STAR);
    let mode = FitMode::from(a.mode);

    let records: Vec<FitRecord> = planes
        .par_iter()
        .enumerate()
        .map(|(plane, h)| {
            let sigma = sigmas
                .as_ref()
                .and_then(|s| s.get(plane).copied())
                .unwrap_or(fallback_sigma);
            let r = subpixel_refine(h, mode, sigma, a.side);
            FitRecord {
                plane,
                branch: r.branch.as_str().to_string(),
                u: sig9(r.center.u),
                v: sig9(r.center.v),
                residual: sig9(r.residual),
                peak_x: r.suboptimal.u,
                peak_y: r.suboptimal.v,
                cause: r.cause.map(|c| c.as_str().to_string()),
            }
        })
        .collect();
    paths::write_output(a.out.as_deref(), &render(&records, a.format)?)
}

pub fn read_records(path: &Path, format: Format) -> Result<Vec<FitRecord>> {
    let text = std::fs::read_to_string(path)?;
    Ok(match format {
        Format::Json => serde_json::from_str(&text)?,
        Format::Csv => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            reader
                .deserialize()
                .map(|row| {
                    let mut r: FitRecord = row?;
                    r.cause = r.cause.filter(|c| !c.is_empty());
                    Ok(r)
                })
                .collect::<Result<_>>()?
        }
    })
}
