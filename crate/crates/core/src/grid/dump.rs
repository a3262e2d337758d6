//! Field dump format: a JSON header next to a raw little-endian `f64` file
//! holding interleaved real and imaginary parts.

use super::{BoundaryField, GridSpec, Representation};
use crate::error::{Error, Result};
use crate::linalg::c64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const FORMAT: &str = "dblab-field-dump";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub format: String,
    pub version: u32,
    pub grid: GridSpec,
    pub components: usize,
    pub representation: Representation,
    /// Array shape, slowest axis first; the product equals the number of complex values.
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    /// Free-form label (for example `"u"`, `"conormal_gradient"`, `"operator"`).
    pub content: String,
    /// Data file name, relative to the header.
    pub data_file: String,
}

/// Writes `<dir>/<name>.json` and `<dir>/<name>.bin`; returns the header path.
pub fn write(dir: &Path, name: &str, header: &DumpHeader, data: &[c64]) -> Result<PathBuf> {
    let expected: usize = header.shape.iter().product();
    if expected != data.len() {
        return Err(Error::InvalidParameter(format!("dump shape holds {expected} values, got {}", data.len())));
    }
    std::fs::create_dir_all(dir)?;
    let mut h = header.clone();
    h.data_file = format!("{name}.bin");
    let mut bytes = Vec::with_capacity(16 * data.len());
    for z in data {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    std::fs::write(dir.join(&h.data_file), bytes)?;
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&h)? + "\n")?;
    Ok(path)
}

pub fn read(header_path: &Path) -> Result<(DumpHeader, Vec<c64>)> {
    let h: DumpHeader = serde_json::from_str(&std::fs::read_to_string(header_path)?)?;
    if h.format != FORMAT {
        return Err(Error::InvalidParameter(format!("unknown dump format {:?}", h.format)));
    }
    h.grid.validate()?;
    let dir = header_path.parent().unwrap_or_else(|| Path::new("."));
    let bytes = std::fs::read(dir.join(&h.data_file))?;
    let expected: usize = h.shape.iter().product();
    if bytes.len() != 16 * expected {
        return Err(Error::InvalidParameter(format!(
            "data file has {} bytes, header implies {}",
            bytes.len(),
            16 * expected
        )));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            c64::new(re, im)
        })
        .collect();
    Ok((h, data))
}

pub fn field_header(f: &BoundaryField, content: &str) -> DumpHeader {
    DumpHeader {
        format: FORMAT.into(),
        version: 1,
        grid: f.grid,
        components: f.components,
        representation: f.representation,
        shape: vec![f.components, f.grid.total()],
        t_grid: None,
        content: content.into(),
        data_file: String::new(),
    }
}

pub fn write_field(dir: &Path, name: &str, f: &BoundaryField, content: &str) -> Result<PathBuf> {
    write(dir, name, &field_header(f, content), &f.values)
}

pub fn read_field(header_path: &Path) -> Result<BoundaryField> {
    let (h, data) = read(header_path)?;
    if h.shape != [h.components, h.grid.total()] {
        return Err(Error::InvalidParameter("dump is not a boundary field".into()));
    }
    BoundaryField::new(h.grid, h.components, data, h.representation)
}
