use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hsr_core::io::read_hmap_file;
use hsr_core::{Heatmap, Manifest};

pub fn default_manifest(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn check_input(path: &Path) -> Result<()> {
    let meta =
        std::fs::metadata(path).with_context(|| format!("cannot read {}", path.display()))?;
    if !meta.is_file() {
        bail!("{} is not a regular file", path.display());
    }
    Ok(())
}

/// Refuse outputs in missing directories, on directories, or on any of the
/// inputs.
pub fn check_output(path: &Path, inputs: &[&Path]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        bail!("output directory {} does not exist", parent.display());
    }
    if path.is_dir() {
        bail!("output path {} is a directory", path.display());
    }
    if let Ok(out) = path.canonicalize() {
        for input in inputs {
            if input.canonicalize().is_ok_and(|i| i == out) {
                bail!("output {} would overwrite an input", path.display());
            }
        }
    }
    Ok(())
}

pub fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn load_planes(path: &Path) -> Result<Vec<Heatmap>> {
    read_hmap_file(path).with_context(|| format!("cannot load {}", path.display()))
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    Manifest::load(path).with_context(|| format!("cannot load {}", path.display()))
}

/// JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Round to nine significant digits so JSON carries the same numbers as the
/// CSV output.
pub fn sig9(x: f64) -> f64 {
    hsr_core::metrics::format_sig9(x)
        .parse()
        .expect("formatted float parses")
}
