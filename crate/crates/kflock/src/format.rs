//! Binary density snapshots and CSV tables.
//!
//! A snapshot is a 32-byte little-endian header followed by the values as
//! `f64`, x-major (`values[i * n_v + j]`):
//!
//! | offset | type    | field   |
//! |--------|---------|---------|
//! | 0      | [u8; 4] | `KFLK`  |
//! | 4      | u32     | version |
//! | 8      | u32     | n_x     |
//! | 12     | u32     | n_v     |
//! | 16     | f64     | v_min   |
//! | 24     | f64     | v_max   |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use kflock_core::homogeneous::VGrid;
use kflock_core::pde::{DensityField, PhaseGrid};
use serde::Serialize;

pub const MAGIC: [u8; 4] = *b"KFLK";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("not a density snapshot (bad magic)")]
    Magic,
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("truncated snapshot: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("snapshot content rejected: {0}")]
    Content(#[from] kflock_core::Error),
}

pub fn encode_density(f: &DensityField) -> Vec<u8> {
    let g = f.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * f.values.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n_x() as u32).to_le_bytes());
    out.extend_from_slice(&(g.n_v() as u32).to_le_bytes());
    out.extend_from_slice(&g.vgrid().v_min().to_le_bytes());
    out.extend_from_slice(&g.vgrid().v_max().to_le_bytes());
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode_density(bytes: &[u8]) -> Result<DensityField, FormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Length { expected: HEADER_LEN, found: bytes.len() });
    }
    if bytes[..4] != MAGIC {
        return Err(FormatError::Magic);
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(FormatError::Version(version));
    }
    let (n_x, n_v) = (u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize);
    let expected = HEADER_LEN + 8 * n_x * n_v;
    if bytes.len() != expected {
        return Err(FormatError::Length { expected, found: bytes.len() });
    }
    let grid = PhaseGrid::new(n_x, VGrid::new(f64_at(bytes, 16), f64_at(bytes, 24), n_v)?)?;
    let values = bytes[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(DensityField::new(grid, values)?)
}

pub fn write_density(path: &Path, f: &DensityField) -> Result<(), FormatError> {
    std::fs::write(path, encode_density(f))?;
    Ok(())
}

pub fn read_density(path: &Path) -> Result<DensityField, FormatError> {
    decode_density(&std::fs::read(path)?)
}

/// Writes one row per record with a header taken from the field names.
/// Floats are written as the shortest decimal that parses back to the same
/// value.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Like [`write_csv`] for tables whose columns are only known at run time.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), FormatError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
