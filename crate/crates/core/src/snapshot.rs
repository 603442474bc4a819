//! Binary field snapshots.
//!
//! Layout (little endian, no padding):
//!
//! ```text
//! "HNSF"            4 bytes magic
//! version           u32 (= 1)
//! boundary          u8  (0 periodic, 1 truncated window)
//! nx ny nz          u32 x 3
//! Lx Ly Lz          f64 x 3
//! components        u8  (1 or 3)
//! samples           f64 per sample, component after component, x fastest
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Boundary, Grid3};

pub const MAGIC: &[u8; 4] = b"HNSF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 3 * 4 + 3 * 8 + 1;

/// A field of either rank, as stored in a snapshot file.
#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Snapshot {
    pub fn grid(&self) -> &Grid3 {
        match self {
            Snapshot::Scalar(f) => f.grid(),
            Snapshot::Vector(f) => f.grid(),
        }
    }

    pub fn into_scalar(self) -> Option<ScalarField> {
        match self {
            Snapshot::Scalar(f) => Some(f),
            Snapshot::Vector(_) => None,
        }
    }

    pub fn into_vector(self) -> Option<VectorField> {
        match self {
            Snapshot::Vector(f) => Some(f),
            Snapshot::Scalar(_) => None,
        }
    }
}

impl From<ScalarField> for Snapshot {
    fn from(f: ScalarField) -> Self {
        Snapshot::Scalar(f)
    }
}

impl From<VectorField> for Snapshot {
    fn from(f: VectorField) -> Self {
        Snapshot::Vector(f)
    }
}

fn header(grid: &Grid3, components: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(grid.boundary().code());
    for n in grid.n() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for l in grid.length() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.push(components);
    out
}

pub fn encode_scalar(field: &ScalarField) -> Vec<u8> {
    let mut out = header(field.grid(), 1);
    out.reserve(field.data().len() * 8);
    for v in field.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_vector(field: &VectorField) -> Vec<u8> {
    let mut out = header(field.grid(), 3);
    out.reserve(field.grid().len() * 24);
    for c in field.components() {
        for v in c.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn encode(snapshot: &Snapshot) -> Vec<u8> {
    match snapshot {
        Snapshot::Scalar(f) => encode_scalar(f),
        Snapshot::Vector(f) => encode_vector(f),
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::SnapshotHeader(format!(
            "file is {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::SnapshotHeader(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(Error::SnapshotHeader(format!("unsupported version {version}")));
    }
    let boundary = Boundary::from_code(bytes[8])
        .ok_or_else(|| Error::SnapshotHeader(format!("unknown boundary code {}", bytes[8])))?;
    let n = [
        read_u32(bytes, 9) as usize,
        read_u32(bytes, 13) as usize,
        read_u32(bytes, 17) as usize,
    ];
    let length = [read_f64(bytes, 21), read_f64(bytes, 29), read_f64(bytes, 37)];
    let components = bytes[45] as usize;
    if components != 1 && components != 3 {
        return Err(Error::SnapshotHeader(format!(
            "component count must be 1 or 3, got {components}"
        )));
    }
    let grid = Grid3::new(n, length, boundary)
        .map_err(|e| Error::SnapshotHeader(format!("invalid grid: {e}")))?;

    let body = &bytes[HEADER_LEN..];
    let expected = grid.len() * components * 8;
    if body.len() != expected {
        return Err(Error::SnapshotLength {
            expected,
            found: body.len(),
        });
    }
    let mut fields = body.chunks_exact(grid.len() * 8).map(|chunk| {
        let data = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        ScalarField::from_vec(grid, data)
    });
    if components == 1 {
        Ok(Snapshot::Scalar(fields.next().unwrap()?))
    } else {
        let x = fields.next().unwrap()?;
        let y = fields.next().unwrap()?;
        let z = fields.next().unwrap()?;
        Ok(Snapshot::Vector(VectorField::from_components(x, y, z)?))
    }
}

pub fn write_snapshot(snapshot: &Snapshot, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode(snapshot);
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.flush()?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}
