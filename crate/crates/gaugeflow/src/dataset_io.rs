//! The dataset binary format.
//!
//! ```text
//! "GFMD" | u32 LE version (1) | u32 LE n_dim | u64 LE count | count * n_dim f64 LE, row-major
//! ```

use std::fs;
use std::path::Path;

use gaugeflow_core::gmm::Dataset;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"GFMD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * ds.points().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(ds.n_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(ds.len() as u64).to_le_bytes());
    for v in ds.points() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic bytes {:?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let n_dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as u64;
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if n_dim == 0 {
        return Err(Error::Format("n_dim is zero".into()));
    }
    let payload = (bytes.len() - HEADER_LEN) as u64;
    let expected = count
        .checked_mul(n_dim)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Format(format!("header count {count} overflows")))?;
    if payload < expected {
        return Err(Error::Truncated {
            expected: expected + HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    if payload > expected {
        return Err(Error::Format(format!(
            "header declares {count} points of dimension {n_dim} but the payload holds {payload} bytes"
        )));
    }
    let points: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = points.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format(format!(
            "non-finite value at point {}, coordinate {}",
            i as u64 / n_dim,
            i as u64 % n_dim
        )));
    }
    Ok(Dataset::new(n_dim as usize, points)?)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_dataset(ds)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes)
}
