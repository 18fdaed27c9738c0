//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `NLSF`, `u32` version (1), `u32` n,
//! `u32` points per axis, `f64` length per axis, `f64` t, `f64` ε, then the
//! samples as interleaved `(re, im)` `f64` pairs with axis 1 fastest.

use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{Field, Grid};

pub const MAGIC: &[u8; 4] = b"NLSF";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot i/o: {0}")]
    Io(#[from] io::Error),

    #[error("not a snapshot file (bad magic {0:?})")]
    BadMagic([u8; 4]),

    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),

    #[error("snapshot truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },

    #[error("snapshot has trailing data: expected {expected} bytes, found {found}")]
    TrailingData { expected: usize, found: usize },

    #[error("snapshot grid {found} does not match the target grid {expected}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid snapshot header: {0}")]
    InvalidHeader(String),
}

/// Decoded snapshot.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field: Field,
    pub t: f64,
    pub epsilon: f64,
}

/// Serializes `f` (time tag, or `t` = 0 when untagged) with `epsilon`.
pub fn encode_snapshot(f: &Field, epsilon: f64) -> Vec<u8> {
    let g = f.grid();
    let n = g.dim();
    let mut out = Vec::with_capacity(4 + 8 + 12 * n + 16 + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for &p in g.points() {
        out.extend_from_slice(&(p as u32).to_le_bytes());
    }
    for &l in g.lengths() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&f.time().unwrap_or(0.0).to_le_bytes());
    out.extend_from_slice(&epsilon.to_le_bytes());
    for z in f.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], SnapshotError> {
        if self.pos + k > self.bytes.len() {
            return Err(SnapshotError::Truncated {
                needed: self.pos + k,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

fn describe(points: &[usize], lengths: &[f64]) -> String {
    let pts: Vec<String> = points.iter().map(|p| p.to_string()).collect();
    let ls: Vec<String> = lengths.iter().map(|l| l.to_string()).collect();
    format!("N = [{}], L = [{}]", pts.join(", "), ls.join(", "))
}

/// Decodes a snapshot, building its grid from the header. When `target` is
/// given the header must describe the same grid.
pub fn decode_snapshot(
    bytes: &[u8],
    target: Option<&Arc<Grid>>,
) -> Result<Snapshot, SnapshotError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let n = r.u32()? as usize;
    if !(1..=2).contains(&n) {
        return Err(SnapshotError::InvalidHeader(format!("dimension {n}")));
    }
    let points = (0..n)
        .map(|_| r.u32().map(|p| p as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let lengths = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    let t = r.f64()?;
    let epsilon = r.f64()?;

    let grid = match target {
        Some(g) => {
            if g.points() != points.as_slice() || g.lengths() != lengths.as_slice() {
                return Err(SnapshotError::DimensionMismatch {
                    expected: describe(g.points(), g.lengths()),
                    found: describe(&points, &lengths),
                });
            }
            g.clone()
        }
        None => {
            Grid::new(&points, &lengths).map_err(|e| SnapshotError::InvalidHeader(e.to_string()))?
        }
    };

    let count = grid.len();
    let expected = r.pos + 16 * count;
    if bytes.len() < expected {
        return Err(SnapshotError::Truncated {
            needed: expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(SnapshotError::TrailingData {
            expected,
            found: bytes.len(),
        });
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let re = r.f64()?;
        let im = r.f64()?;
        values.push(Complex64::new(re, im));
    }
    let field =
        Field::new(&grid, values).map_err(|e| SnapshotError::InvalidHeader(e.to_string()))?;
    Ok(Snapshot {
        field: field.with_time(t),
        t,
        epsilon,
    })
}

pub fn write_snapshot(f: &Field, epsilon: f64, path: &Path) -> Result<(), SnapshotError> {
    fs::write(path, encode_snapshot(f, epsilon))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    decode_snapshot(&fs::read(path)?, None)
}

/// Reads a snapshot that must live on `grid`.
pub fn read_snapshot_into(path: &Path, grid: &Arc<Grid>) -> Result<Snapshot, SnapshotError> {
    decode_snapshot(&fs::read(path)?, Some(grid))
}
