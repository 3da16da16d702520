use anyhow::{Context, Result};
use hsr_core::synth::{generate_corpus, DoubleCentroidSpec, TailSpec};
use hsr_core::CorruptionSpec;

use crate::args::GenArgs;
use crate::paths::{check_output, default_manifest};

pub fn run(a: &GenArgs) -> Result<()> {
    let manifest_path = a
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest(&a.out));
    check_output(&a.out, &[])?;
    check_output(&manifest_path, &[&a.out])?;
    if manifest_path == a.out {
        anyhow::bail!("manifest and corpus paths must differ");
    }

    let spec = CorruptionSpec {
        noise_sigma: a.noise,
        tail: a
            .tail_direction
            .zip(a.tail_decay)
            .map(|(direction_deg, decay)| TailSpec {
                direction_deg,
                decay,
            }),
        double_centroid: a.dc_ratio.map(|ratio| DoubleCentroidSpec {
            ratio,
            dx: a.dc_dx,
            dy: a.dc_dy,
        }),
        seed: a.seed,
    };
    let corpus = generate_corpus(a.count, a.sigma, a.size, &spec)?;
    corpus
        .write(&a.out, &manifest_path)
        .with_context(|| format!("cannot write {}", a.out.display()))?;
    eprintln!(
        "wrote {} planes to {} and {}",
        a.count,
        a.out.display(),
        manifest_path.display()
    );
    Ok(())
}
