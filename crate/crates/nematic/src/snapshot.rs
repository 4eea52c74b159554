//! Binary snapshot format for gridded fields.
//!
//! A snapshot stores one field (any number of components per node) on a
//! square periodic grid, together with the simulation time.  The layout is
//! fixed and little-endian throughout:
//!
//! ```text
//! bytes 0..4    magic  b"NFLD"
//! bytes 4..8    format version, u32 (currently 1)
//! bytes 8..12   grid size n per side, u32
//! bytes 12..20  domain side length, f64
//! bytes 20..24  arity (components per node), u32
//! bytes 24..32  simulation time, f64
//! bytes 32..    n*n*arity payload values, f64, node-major:
//!               all components of node 0, then node 1, ... (node = iy*n + ix)
//! ```
//!
//! Values round-trip bit-exactly (they are moved through `to_le_bytes` /
//! `from_le_bytes`, which preserve every payload bit including NaN bits),
//! so a write → read cycle reproduces a state usable for exact-restart
//! comparisons.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::FormatError;
use crate::field::{ScalarField, Vec2Field, Vec3Field};
use crate::grid::Grid2;

/// File magic identifying the snapshot format.
pub const MAGIC: [u8; 4] = *b"NFLD";
/// Current format version.
pub const VERSION: u32 = 1;

/// An in-memory snapshot: a grid, a time stamp, and one planar `Vec<f64>`
/// per component.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub grid: Grid2,
    pub time: f64,
    pub components: Vec<Vec<f64>>,
}

impl Snapshot {
    /// Wraps a director field.
    pub fn from_vec3(field: &Vec3Field, time: f64) -> Self {
        Snapshot {
            grid: field.grid,
            time,
            components: field.comp.iter().cloned().collect(),
        }
    }

    /// Wraps a velocity field.
    pub fn from_vec2(field: &Vec2Field, time: f64) -> Self {
        Snapshot {
            grid: field.grid,
            time,
            components: field.comp.iter().cloned().collect(),
        }
    }

    /// Wraps a scalar field.
    pub fn from_scalar(field: &ScalarField, time: f64) -> Self {
        Snapshot { grid: field.grid, time, components: vec![field.data.clone()] }
    }

    /// Extracts a three-component field, or reports the actual arity.
    pub fn to_vec3(&self) -> Result<Vec3Field, FormatError> {
        if self.components.len() != 3 {
            return Err(FormatError::BadHeader(format!(
                "expected arity 3, snapshot has arity {}",
                self.components.len()
            )));
        }
        Ok(Vec3Field {
            grid: self.grid,
            comp: [
                self.components[0].clone(),
                self.components[1].clone(),
                self.components[2].clone(),
            ],
        })
    }

    /// Extracts a two-component field, or reports the actual arity.
    pub fn to_vec2(&self) -> Result<Vec2Field, FormatError> {
        if self.components.len() != 2 {
            return Err(FormatError::BadHeader(format!(
                "expected arity 2, snapshot has arity {}",
                self.components.len()
            )));
        }
        Ok(Vec2Field {
            grid: self.grid,
            comp: [self.components[0].clone(), self.components[1].clone()],
        })
    }

    /// Serializes into any writer.
    pub fn write_to(&self, w: &mut impl Write) -> Result<(), FormatError> {
        let n = self.grid.n();
        let arity = self.components.len();
        assert!(arity > 0, "snapshot must have at least one component");
        for (c, comp) in self.components.iter().enumerate() {
            assert!(
                comp.len() == n * n,
                "component {c} has {} values, grid wants {}",
                comp.len(),
                n * n
            );
        }
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(n as u32).to_le_bytes())?;
        w.write_all(&self.grid.length().to_le_bytes())?;
        w.write_all(&(arity as u32).to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        // Node-major interleaving keeps all components of a node adjacent,
        // which lets partial reads of a truncated file fail loudly rather
        // than yield a silently shifted field.
        let mut buf = Vec::with_capacity(n * n * arity * 8);
        for node in 0..n * n {
            for comp in &self.components {
                buf.extend_from_slice(&comp[node].to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Deserializes from any reader, validating magic, version, and sizes.
    pub fn read_from(r: &mut impl Read) -> Result<Self, FormatError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(FormatError::BadMagic(magic));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(FormatError::BadVersion(version));
        }
        let n = read_u32(r)? as usize;
        let length = read_f64(r)?;
        let arity = read_u32(r)? as usize;
        let time = read_f64(r)?;
        let grid = Grid2::new(n, length)
            .map_err(|e| FormatError::BadHeader(e.to_string()))?;
        if arity == 0 || arity > 16 {
            return Err(FormatError::BadHeader(format!("arity {arity} out of range")));
        }
        if !time.is_finite() {
            return Err(FormatError::BadHeader(format!("non-finite time stamp {time}")));
        }
        let expected = n * n * arity * 8;
        let mut buf = vec![0u8; expected];
        let mut found = 0;
        while found < expected {
            let got = r.read(&mut buf[found..])?;
            if got == 0 {
                return Err(FormatError::Truncated { expected, found });
            }
            found += got;
        }
        let mut components = vec![vec![0.0f64; n * n]; arity];
        for node in 0..n * n {
            for (c, comp) in components.iter_mut().enumerate() {
                let off = (node * arity + c) * 8;
                comp[node] = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
            }
        }
        Ok(Snapshot { grid, time, components })
    }

    /// Writes to a file path (buffered).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Reads from a file path (buffered).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32, FormatError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, FormatError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn sample_vec3(n: usize) -> Vec3Field {
        let grid = Grid2::new(n, 2.0).unwrap();
        let rng = CounterRng::new(7);
        let mut field = Vec3Field::zeros(grid);
        for c in 0..3 {
            for (i, v) in field.comp[c].iter_mut().enumerate() {
                *v = rng.uniform_in((c * n * n + i) as u64, -3.0, 3.0);
            }
        }
        field
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let field = sample_vec3(16);
        let snap = Snapshot::from_vec3(&field, 0.1 + 0.2); // deliberately inexact value
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let back = Snapshot::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.time.to_bits(), snap.time.to_bits());
        assert_eq!(back.grid.n(), 16);
        assert_eq!(back.grid.length().to_bits(), 2.0f64.to_bits());
        let restored = back.to_vec3().unwrap();
        for c in 0..3 {
            for (a, b) in field.comp[c].iter().zip(&restored.comp[c]) {
                assert_eq!(a.to_bits(), b.to_bits(), "payload must round-trip bit-exactly");
            }
        }
    }

    #[test]
    fn file_round_trip_and_arity_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.nfld");
        let grid = Grid2::new(8, 1.0).unwrap();
        let v = Vec2Field::from_fn(grid, |x, y| [x + y, x - y]);
        Snapshot::from_vec2(&v, 1.5).save(&path).unwrap();
        let back = Snapshot::load(&path).unwrap();
        assert_eq!(back.components.len(), 2);
        assert!(back.to_vec3().is_err(), "arity mismatch must be reported");
        let v2 = back.to_vec2().unwrap();
        assert_eq!(v2.at(3, 5), v.at(3, 5));
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let field = sample_vec3(8);
        let snap = Snapshot::from_vec3(&field, 0.0);
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            Snapshot::read_from(&mut bad_magic.as_slice()),
            Err(FormatError::BadMagic(_))
        ));

        let mut bad_version = buf.clone();
        bad_version[4] = 9;
        assert!(matches!(
            Snapshot::read_from(&mut bad_version.as_slice()),
            Err(FormatError::BadVersion(9))
        ));

        let truncated = &buf[..buf.len() - 11];
        match Snapshot::read_from(&mut &truncated[..]) {
            Err(FormatError::Truncated { expected, found }) => {
                assert_eq!(expected, 8 * 8 * 3 * 8);
                assert_eq!(found, expected - 11);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }
}
