//! Binary field files: "SCFD", u16 version, u16 n, u8 space flag, n x u64 dims,
//! 2n x f64 box extents (lo, hi per axis), then (re, im) f64 pairs, row-major,
//! all little-endian. Several records may follow each other in one file.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fields::{GridField, GridSpec, Space};

pub const MAGIC: &[u8; 4] = b"SCFD";
pub const VERSION: u16 = 1;

fn space_flag(s: Space) -> u8 {
    match s {
        Space::Physical => 0,
        Space::Frequency => 1,
        Space::Mixed(k) => 2 + k as u8,
    }
}

fn flag_space(f: u8) -> Space {
    match f {
        0 => Space::Physical,
        1 => Space::Frequency,
        k => Space::Mixed((k - 2) as usize),
    }
}

pub fn write_field<W: Write>(w: &mut W, f: &GridField) -> Result<()> {
    let n = f.n();
    let mut buf = Vec::with_capacity(16 + n * 24 + f.data.len() * 16);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u16).to_le_bytes());
    buf.push(space_flag(f.space));
    for &d in &f.grid.dims {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for j in 0..n {
        buf.extend_from_slice(&f.grid.lo[j].to_le_bytes());
        buf.extend_from_slice(&f.grid.hi[j].to_le_bytes());
    }
    for v in &f.data {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<R: Read, const K: usize>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)?;
    Ok(b)
}

/// Reads one record; `Ok(None)` at a clean end of input.
pub fn read_field<R: Read>(r: &mut R) -> Result<Option<GridField>> {
    let mut magic = [0u8; 4];
    let got = r.read(&mut magic)?;
    if got == 0 {
        return Ok(None);
    }
    if got < 4 {
        r.read_exact(&mut magic[got..])?;
    }
    if &magic != MAGIC {
        return Err(Error::Io("bad magic".into()));
    }
    let version = u16::from_le_bytes(take(r)?);
    if version != VERSION {
        return Err(Error::Io(format!("unsupported version {version}")));
    }
    let n = u16::from_le_bytes(take(r)?) as usize;
    let space = flag_space(take::<_, 1>(r)?[0]);
    let mut dims = Vec::with_capacity(n);
    for _ in 0..n {
        dims.push(u64::from_le_bytes(take(r)?) as usize);
    }
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for _ in 0..n {
        lo.push(f64::from_le_bytes(take(r)?));
        hi.push(f64::from_le_bytes(take(r)?));
    }
    let grid = GridSpec { dims, lo, hi };
    let len = grid.len();
    let mut raw = vec![0u8; len * 16];
    r.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok(Some(GridField { grid, space, data }))
}

pub fn write_fields(path: &std::path::Path, fields: &[&GridField]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for f in fields {
        write_field(&mut w, f)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fields(path: &std::path::Path) -> Result<Vec<GridField>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    while let Some(f) = read_field(&mut r)? {
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_two_records() {
        let g = GridSpec::centered(&[1.0, -2.0], 4, 3.0);
        let a = GridField::from_fn(g.clone(), |x| C64::new(x[0], x[1]));
        let mut b = GridField::zeros(g, Space::Mixed(1));
        b.data[3] = C64::new(-1.5, 2.5);
        let mut buf = Vec::new();
        write_field(&mut buf, &a).unwrap();
        write_field(&mut buf, &b).unwrap();
        assert_eq!(&buf[..4], b"SCFD");
        let mut r = buf.as_slice();
        assert_eq!(read_field(&mut r).unwrap().unwrap(), a);
        assert_eq!(read_field(&mut r).unwrap().unwrap(), b);
        assert!(read_field(&mut r).unwrap().is_none());
        assert!(read_field(&mut &b"SCFX"[..]).is_err());
    }
}
