//! Binary snapshot container and CSV series output.
//!
//! Layout: magic `HROMSNP1`, version `u32`, `N` `u64`, count `u64`, `dt` `f64`,
//! stride `u64`, then `count` columns of `N` little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

pub const MAGIC: &[u8; 8] = b"HROMSNP1";
pub const VERSION: u32 = 1;

/// Column-major matrix with its sampling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub dim: usize,
    pub count: usize,
    pub dt: f64,
    pub stride: usize,
    pub data: Vec<f64>,
}

impl SnapshotFile {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            dim: traj.dim(),
            count: traj.len(),
            dt: traj.dt(),
            stride: traj.stride(),
            data: traj.data().to_vec(),
        }
    }

    pub fn into_trajectory(self) -> Result<Trajectory> {
        Trajectory::from_columns(self.dim, self.data, self.dt, self.stride)
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        if self.data.len() != self.dim * self.count {
            return Err(Error::Format(format!(
                "{} values do not fill {} columns of length {}",
                self.data.len(),
                self.count,
                self.dim
            )));
        }
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        w.write_all(&(self.count as u64).to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&(self.stride as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let dim = next_u64(&mut r)? as usize;
        let count = next_u64(&mut r)? as usize;
        let dt = f64::from_bits(next_u64(&mut r)?);
        let stride = next_u64(&mut r)? as usize;
        let len = dim
            .checked_mul(count)
            .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != len * 8 {
            return Err(Error::Format(format!(
                "header promises {len} values, payload holds {} bytes",
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self {
            dim,
            count,
            dt,
            stride,
            data,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// Writes equal-length columns as CSV with a header row and 17 significant digits.
pub fn write_csv<W: Write>(mut w: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() {
        return Err(Error::Format("header and column counts differ".into()));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::Format("CSV columns differ in length".into()));
    }
    writeln!(w, "{}", header.join(","))?;
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format!("{:.16e}", c[i])).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), header, columns)
}
