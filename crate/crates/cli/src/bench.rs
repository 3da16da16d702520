use anyhow::Result;
use hsr_core::synth::{run_benchmark, write_bench_csv};
use hsr_core::BenchResult;

use crate::args::{BenchArgs, Format};
use crate::paths::{self, check_input, check_output, default_manifest, load_manifest, load_planes};

pub fn run(a: &BenchArgs) -> Result<()> {
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
    let results = run_benchmark(&planes, &manifest, &a.methods, a.side)?;
    let text = match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_bench_csv(&mut buf, &results)?;
            String::from_utf8(buf)?
        }
        Format::Json => {
            let rounded: Vec<BenchResult> = results
                .into_iter()
                .map(|r| BenchResult {
                    mean_abs_err_px: paths::sig9(r.mean_abs_err_px),
                    mean_nme: paths::sig9(r.mean_nme),
                    std_nme: paths::sig9(r.std_nme),
                    fallback_rate: paths::sig9(r.fallback_rate),
                    ..r
                })
                .collect();
            paths::to_json(&rounded)?
        }
    };
    paths::write_output(a.out.as_deref(), &text)
}
