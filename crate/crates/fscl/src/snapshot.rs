//! FSCL1 snapshot files.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FSCL"
//! 4       1     version (0x01)
//! 5       8     N, u64 little-endian
//! 13      8     L, f64 little-endian
//! 21      8     time
//! 29      8     α
//! 37      8     ε
//! 45      8·N   cell values
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use fscl_core::{Field, Grid};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"FSCL";
pub const VERSION: u8 = 1;
const HEADER: usize = 45;

/// One decoded snapshot with the operator parameters it was written with.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: Field,
    pub alpha: f64,
    pub epsilon: f64,
}

pub fn encode(field: &Field, alpha: f64, epsilon: f64) -> Vec<u8> {
    let n = field.grid().cells();
    let mut out = Vec::with_capacity(HEADER + 8 * n);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for v in [field.grid().length(), field.time(), alpha, epsilon] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("eight bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot, String> {
    if bytes.len() < HEADER {
        return Err(format!("{} bytes is shorter than the {HEADER}-byte header", bytes.len()));
    }
    if &bytes[..4] != MAGIC {
        return Err("bad magic".into());
    }
    if bytes[4] != VERSION {
        return Err(format!("unsupported version {}", bytes[4]));
    }
    let n = u64::from_le_bytes(bytes[5..13].try_into().expect("eight bytes"));
    let expected = usize::try_from(n).ok().and_then(|n| n.checked_mul(8)).and_then(|b| b.checked_add(HEADER));
    if expected != Some(bytes.len()) {
        return Err(format!("{n} cells do not match a payload of {} bytes", bytes.len() - HEADER));
    }
    let (length, time, alpha, epsilon) = (f64_at(bytes, 13), f64_at(bytes, 21), f64_at(bytes, 29), f64_at(bytes, 37));
    let values = (0..n as usize).map(|i| f64_at(bytes, HEADER + 8 * i)).collect();
    let grid = Grid::new(length, n as usize).map_err(|e| e.to_string())?;
    let field = Field::new(grid, values, time).map_err(|e| e.to_string())?;
    Ok(Snapshot { field, alpha, epsilon })
}

pub fn write(path: &Path, field: &Field, alpha: f64, epsilon: f64) -> CliResult<()> {
    let mut file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(&encode(field, alpha, epsilon)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> CliResult<Snapshot> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|reason| CliError::format(path, reason))
}
