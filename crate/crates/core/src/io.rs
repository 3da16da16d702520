//! `HMAP` v1 plane container and its JSON manifest.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"HMAP" | u32 version = 1 | u32 width | u32 height | u32 count
//! count planes of width * height f32 values, row-major
//! ```
//!
//! The manifest records the ground truth for every plane.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HsrError, Result};
use crate::heatmap::{Heatmap, Landmark};
use crate::synth::CorruptionSpec;

pub const HMAP_MAGIC: &[u8; 4] = b"HMAP";
pub const HMAP_VERSION: u32 = 1;
pub const MANIFEST_VERSION: u32 = 1;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(HsrError::InputFormat(msg.into()))
}

/// Round a heatmap through the `f32` storage precision.
pub fn quantize_f32(h: &Heatmap) -> Heatmap {
    let values = h.values().iter().map(|&v| v as f32 as f64).collect();
    Heatmap::new(h.width(), h.height(), values).expect("quantized heatmap keeps its shape")
}

pub fn write_hmap<W: Write>(mut w: W, planes: &[Heatmap]) -> Result<()> {
    let (width, height) = match planes.first() {
        Some(p) => (p.width(), p.height()),
        None => (0, 0),
    };
    if let Some(i) = planes
        .iter()
        .position(|p| p.width() != width || p.height() != height)
    {
        return Err(HsrError::InvalidArgument(format!(
            "plane {i} is {}x{}, expected {width}x{height}",
            planes[i].width(),
            planes[i].height()
        )));
    }
    let dim = |v: usize, what: &str| {
        u32::try_from(v)
            .map_err(|_| HsrError::InvalidArgument(format!("{what} {v} does not fit in u32")))
    };
    w.write_all(HMAP_MAGIC)?;
    for field in [
        HMAP_VERSION,
        dim(width, "width")?,
        dim(height, "height")?,
        dim(planes.len(), "plane count")?,
    ] {
        w.write_all(&field.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(width * height * 4);
    for plane in planes {
        buf.clear();
        for &v in plane.values() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_hmap<R: Read>(mut r: R) -> Result<Vec<Heatmap>> {
    let mut header = [0u8; 20];
    if let Err(e) = r.read_exact(&mut header) {
        return match e.kind() {
            std::io::ErrorKind::UnexpectedEof => format_err("truncated HMAP header"),
            _ => Err(e.into()),
        };
    }
    if &header[..4] != HMAP_MAGIC {
        return format_err("missing HMAP magic");
    }
    let field = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (version, width, height, count) = (field(0), field(1), field(2), field(3));
    if version != HMAP_VERSION {
        return format_err(format!("unsupported HMAP version {version}"));
    }
    let (width, height) = (width as usize, height as usize);
    if count > 0 && (width == 0 || height == 0) {
        return format_err(format!("empty plane size {width}x{height}"));
    }
    let plane_bytes = width * height * 4;
    let mut buf = vec![0u8; plane_bytes];
    let mut planes = Vec::with_capacity(count as usize);
    for index in 0..count as usize {
        if let Err(e) = r.read_exact(&mut buf) {
            return match e.kind() {
                std::io::ErrorKind::UnexpectedEof => {
                    format_err(format!("truncated HMAP data in plane {index}"))
                }
                _ => Err(e.into()),
            };
        }
        let values: Vec<f64> = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let plane = Heatmap::new(width, height, values)
            .map_err(|e| HsrError::InputFormat(format!("plane {index}: {e}")))?;
        planes.push(plane);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return format_err("trailing bytes after the last HMAP plane");
    }
    Ok(planes)
}

pub fn write_hmap_file(path: &Path, planes: &[Heatmap]) -> Result<()> {
    write_hmap(BufWriter::new(File::create(path)?), planes)
}

pub fn read_hmap_file(path: &Path) -> Result<Vec<Heatmap>> {
    read_hmap(BufReader::new(File::open(path)?))
}

/// Ground truth for one plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneEntry {
    pub index: usize,
    pub u_true: f64,
    pub v_true: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_constant: Option<f64>,
    /// Per-plane override of the manifest-wide spread.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_star: Option<f64>,
}

impl PlaneEntry {
    pub fn truth(&self) -> Landmark {
        Landmark::new(self.u_true, self.v_true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub sigma_star: f64,
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<CorruptionSpec>,
    pub planes: Vec<PlaneEntry>,
}

impl Manifest {
    pub fn sigma_for(&self, index: usize) -> f64 {
        self.planes
            .get(index)
            .and_then(|p| p.sigma_star)
            .unwrap_or(self.sigma_star)
    }

    /// Check that entries are numbered `0..n` in order and match `planes`.
    pub fn validate_against(&self, planes: &[Heatmap]) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return format_err(format!("unsupported manifest version {}", self.version));
        }
        if self.planes.len() != planes.len() {
            return format_err(format!(
                "manifest lists {} planes but the HMAP holds {}",
                self.planes.len(),
                planes.len()
            ));
        }
        for (i, entry) in self.planes.iter().enumerate() {
            if entry.index != i {
                return format_err(format!("manifest entry {i} has index {}", entry.index));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| HsrError::InputFormat(format!("{}: {e}", path.display())))
    }
}
