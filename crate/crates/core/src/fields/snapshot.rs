//! Little-endian binary field snapshots.
//!
//! Layout: `"PFLD"`, version `u32`, `n u32`, `L f64`, `t f64`, `ncomp u32`,
//! then `ncomp` row-major `n × n` arrays of `f64`.

use std::io::{Read, Write};
use std::path::Path;

use super::grid::Grid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PFLD";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub t: f64,
    pub components: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.n() as u32).to_le_bytes())?;
        w.write_all(&self.grid.box_length().to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        w.write_all(&(self.components.len() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.grid.len() * 8);
        for c in &self.components {
            buf.clear();
            for v in c {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read, origin: &Path) -> Result<Self> {
        let bad = |message: &str| Error::Format {
            path: origin.to_path_buf(),
            message: message.into(),
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a field snapshot (bad magic)"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(bad(&format!("unsupported snapshot version {version}")));
        }
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let l = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let t = f64::from_le_bytes(b8);
        r.read_exact(&mut b4)?;
        let ncomp = u32::from_le_bytes(b4) as usize;
        let grid = Grid::new(n, l).map_err(|e| bad(&e.to_string()))?;
        let mut raw = vec![0u8; grid.len() * 8];
        let mut components = Vec::with_capacity(ncomp);
        for _ in 0..ncomp {
            r.read_exact(&mut raw)?;
            components.push(
                raw.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .collect(),
            );
        }
        Ok(Self {
            grid,
            t,
            components,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f), path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let grid = Grid::new(16, 2.5).unwrap();
        let snap = Snapshot {
            grid,
            t: 0.75,
            components: vec![vec![1.0; 256], vec![-2.0; 256]],
        };
        let mut bytes = Vec::new();
        snap.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[0..4], b"PFLD");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16);
        assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), 2.5);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 0.75);
        assert_eq!(u32::from_le_bytes(bytes[28..32].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 32 + 2 * 256 * 8);
        let back = Snapshot::read_from(&bytes[..], Path::new("mem")).unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn bad_magic_rejected() {
        let bytes = b"XXXX0000".to_vec();
        assert!(Snapshot::read_from(&bytes[..], Path::new("mem")).is_err());
    }
}
