use std::io::{Read, Write};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::lattice::Point;

use super::{BoundaryFunction, ClusterResult, Window};

const RLE_MAGIC: &[u8; 4] = b"OCLU";
const RLE_VERSION: u8 = 1;

fn axis_header(names: impl Iterator<Item = usize>) -> String {
    names.map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

impl ClusterResult {
    /// One row per member, in window order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", axis_header(1..=self.window.dim()))?;
        for p in self.points() {
            let row: Vec<String> = p.iter().map(i64::to_string).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Window bounds followed by LEB128 run lengths over the window index,
    /// alternating non-members and members (starting with non-members).
    pub fn write_rle<W: Write>(&self, mut out: W) -> Result<()> {
        let w = &self.window;
        out.write_all(RLE_MAGIC)?;
        out.write_all(&[RLE_VERSION, w.dim() as u8])?;
        for c in w.lo().iter().chain(w.hi().iter()) {
            out.write_all(&c.to_le_bytes())?;
        }
        let mut current = false;
        let mut run = 0u64;
        for i in 0..w.volume() {
            if self.members.contains(i) != current {
                write_varint(&mut out, run)?;
                current = !current;
                run = 0;
            }
            run += 1;
        }
        write_varint(&mut out, run)?;
        Ok(())
    }
}

impl BoundaryFunction {
    /// Rows `x2..xd,L` with `INF` for an empty line and `CENSORED` for
    /// censored values.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},L", axis_header(2..=self.window().dim()))?;
        for (b, v, censored) in self.iter() {
            let mut row: Vec<String> = b.iter().map(i64::to_string).collect();
            row.push(if censored { "CENSORED".to_string() } else { v.to_string() });
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Member set decoded from the run-length format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RleCluster {
    pub window: Window,
    pub members: FixedBitSet,
}

impl RleCluster {
    pub fn contains(&self, x: &[i64]) -> bool {
        self.window.index(x).is_some_and(|i| self.members.contains(i))
    }
}

pub fn read_cluster_rle<R: Read>(mut r: R) -> Result<RleCluster> {
    let mut head = [0u8; 6];
    r.read_exact(&mut head)?;
    if &head[..4] != RLE_MAGIC || head[4] != RLE_VERSION {
        return Err(Error::Format("not a cluster run-length file".into()));
    }
    let d = head[5] as usize;
    let mut coords = vec![0i64; 2 * d];
    for c in coords.iter_mut() {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        *c = i64::from_le_bytes(b);
    }
    let lo = Point::new(coords[..d].to_vec())?;
    let hi = Point::new(coords[d..].to_vec())?;
    let window = Window::with_budget(lo, hi, usize::MAX)?;
    let mut members = FixedBitSet::with_capacity(window.volume());
    let mut pos = 0usize;
    let mut current = false;
    while pos < window.volume() {
        let run = read_varint(&mut r)? as usize;
        let end = pos.checked_add(run).filter(|&e| e <= window.volume());
        let end = end.ok_or_else(|| Error::Format("run overflows the window".into()))?;
        if current {
            members.insert_range(pos..end);
        }
        pos = end;
        current = !current;
    }
    Ok(RleCluster { window, members })
}

fn write_varint<W: Write>(out: &mut W, mut v: u64) -> Result<()> {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.write_all(&[byte])?;
            return Ok(());
        }
        out.write_all(&[byte | 0x80])?;
    }
}

fn read_varint<R: Read>(r: &mut R) -> Result<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let mut b = [0u8; 1];
        r.read_exact(&mut b)?;
        v |= u64::from(b[0] & 0x7f) << shift;
        if b[0] & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(Error::Format("varint too long".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvironmentSpec, Model};
    use crate::reach::{boundary_function, forward_cluster};

    #[test]
    fn rle_round_trip() {
        for seed in 0..10 {
            let env = EnvironmentSpec::new(Model::Orthant, "0.7".parse().unwrap(), seed, 3).unwrap();
            let w = Window::cube(3, 6).unwrap();
            let c = forward_cluster(&env, &Point::origin(3), &w).unwrap();
            let mut buf = Vec::new();
            c.write_rle(&mut buf).unwrap();
            let back = read_cluster_rle(&buf[..]).unwrap();
            assert_eq!(&back.members, c.members());
            assert_eq!(back.window.lo(), w.lo());
            assert!(back.contains(&[0, 0, 0]));
        }
        assert!(read_cluster_rle(&b"XXXX"[..]).is_err());
    }

    #[test]
    fn csv_layout() {
        let env = EnvironmentSpec::new(Model::HalfOrthant, "1".parse().unwrap(), 0, 2).unwrap();
        let w = Window::cube(2, 1).unwrap();
        let c = forward_cluster(&env, &Point::origin(2), &w).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x1,x2\n0,0\n0,1\n1,0\n1,1\n");
        let f = boundary_function(&env, &Point::origin(2), &w).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x2,L\n-1,INF\n0,0\n1,0\n");
    }
}
