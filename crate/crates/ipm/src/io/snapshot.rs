//! Binary field snapshots.
//!
//! Layout (all integers and floats little-endian):
//!
//! | offset | size      | content                         |
//! |--------|-----------|---------------------------------|
//! | 0      | 4         | magic `IPM1`                    |
//! | 4      | 4         | `n1` as u32                     |
//! | 8      | 4         | `n2` as u32                     |
//! | 12     | 8         | box length as f64               |
//! | 20     | 8         | Sobolev index `s` as f64        |
//! | 28     | 8         | snapshot time as f64            |
//! | 36     | 8*n1*n2   | samples, `x2`-major over rows   |
//!
//! Round trips are bit-exact. Malformed input is rejected with the byte
//! offset of the first inconsistency, before any payload allocation.

use crate::error::{Error, Result};
use crate::spectral::field::RealField;
use crate::spectral::grid::Grid;
use std::fs;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"IPM1";
pub const HEADER_LEN: usize = 36;

/// A field together with the solver time it was captured at.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field: RealField,
    pub time: f64,
}

/// Serialize a field and its capture time.
pub fn snapshot_bytes(field: &RealField, time: f64) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * grid.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(grid.n1() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n2() as u32).to_le_bytes());
    out.extend_from_slice(&grid.box_length().to_le_bytes());
    out.extend_from_slice(&grid.s().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for &v in field.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Write a snapshot file. An existing file is only replaced when `force`
/// is set.
pub fn write_snapshot(field: &RealField, time: f64, path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::Overwrite { path: path.to_path_buf() });
    }
    fs::write(path, snapshot_bytes(field, time))
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn corrupt(offset: usize, message: impl Into<String>) -> Error {
    Error::Snapshot { offset, message: message.into() }
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(corrupt(offset, format!("truncated before {what}")));
    }
    Ok(u32::from_le_bytes(bytes[offset..end].try_into().unwrap()))
}

fn read_f64(bytes: &[u8], offset: usize, what: &str) -> Result<f64> {
    let end = offset + 8;
    if bytes.len() < end {
        return Err(corrupt(offset, format!("truncated before {what}")));
    }
    Ok(f64::from_le_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Decode a snapshot from a byte slice.
pub fn read_snapshot_bytes(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(corrupt(0, "missing IPM1 magic"));
    }
    let n1 = read_u32(bytes, 4, "grid width")?;
    let n2 = read_u32(bytes, 8, "grid height")?;
    let box_length = read_f64(bytes, 12, "box length")?;
    let s = read_f64(bytes, 20, "Sobolev index")?;
    let time = read_f64(bytes, 28, "snapshot time")?;
    if !time.is_finite() {
        return Err(corrupt(28, format!("non-finite snapshot time {time}")));
    }

    let count = (n1 as u64)
        .checked_mul(n2 as u64)
        .filter(|&c| c <= (usize::MAX as u64 - HEADER_LEN as u64) / 8)
        .ok_or_else(|| corrupt(4, format!("grid {n1}x{n2} overflows the payload size")))?;
    let expected = HEADER_LEN as u64 + 8 * count;
    if (bytes.len() as u64) != expected {
        let offset = bytes.len().min(expected.min(usize::MAX as u64) as usize);
        return Err(corrupt(
            offset,
            format!(
                "payload length mismatch: {n1}x{n2} grid needs {expected} bytes, file has {}",
                bytes.len()
            ),
        ));
    }

    let grid = Grid::new(n1 as usize, n2 as usize, box_length, s)
        .map_err(|e| corrupt(4, format!("invalid grid header: {e}")))?;

    let mut samples = Vec::with_capacity(count as usize);
    for i in 0..count as usize {
        let offset = HEADER_LEN + 8 * i;
        let v = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
        if !v.is_finite() {
            return Err(corrupt(offset, format!("non-finite sample {v}")));
        }
        samples.push(v);
    }
    Ok(Snapshot { field: RealField::from_samples(grid, samples)?, time })
}

/// Read a snapshot file.
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes =
        fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_snapshot_bytes(&bytes)
}

fn describe(grid: Grid) -> String {
    format!(
        "{}x{} box {} s {}",
        grid.n1(),
        grid.n2(),
        grid.box_length(),
        grid.s()
    )
}

/// Require a decoded snapshot to live on the grid the caller expects; the
/// error names both layouts.
pub fn ensure_grid(found: Grid, expected: Grid) -> Result<()> {
    if found != expected {
        return Err(Error::GridMismatch {
            expected: describe(expected),
            found: describe(found),
        });
    }
    Ok(())
}
