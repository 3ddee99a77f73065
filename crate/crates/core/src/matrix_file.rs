//! Flat binary matrix files: a 4-byte magic, `u32` version, `u32` rows,
//! `u32` columns, then rows×columns little-endian `f64` in row-major order.
//!
//! Article encodings use magic `AENC`, image feature grids `IFEA`.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::{Error, Result};

pub const ARTICLE_MAGIC: [u8; 4] = *b"AENC";
pub const FEATURE_MAGIC: [u8; 4] = *b"IFEA";
pub const VERSION: u32 = 1;

pub fn write_matrix(mut w: impl Write, magic: [u8; 4], m: &Array2<f64>) -> std::io::Result<()> {
    let (rows, cols) = m.dim();
    w.write_all(&magic)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(rows as u32).to_le_bytes())?;
    w.write_all(&(cols as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(rows * cols * 8);
    for v in m.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_matrix(mut r: impl Read, magic: [u8; 4]) -> Result<Array2<f64>> {
    let io = |e| Error::io("<matrix>", e);
    let mut got = [0u8; 4];
    r.read_exact(&mut got).map_err(io)?;
    if got != magic {
        return Err(Error::Data(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(&magic)
        )));
    }
    let version = read_u32(&mut r).map_err(io)?;
    if version != VERSION {
        return Err(Error::Data(format!("unsupported matrix file version {version}")));
    }
    let rows = read_u32(&mut r).map_err(io)? as usize;
    let cols = read_u32(&mut r).map_err(io)? as usize;
    let mut buf = vec![0u8; rows * cols * 8];
    r.read_exact(&mut buf).map_err(io)?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Shape(e.to_string()))
}

pub fn save(path: impl AsRef<Path>, magic: [u8; 4], m: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_matrix(&mut buf, magic, m).expect("writing to memory");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>, magic: [u8; 4]) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_matrix(bytes.as_slice(), magic).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn layout_is_exact() {
        let m = array![[1.0, -2.5], [0.0, 3.25], [f64::MIN_POSITIVE, 7.0]];
        let mut buf = Vec::new();
        write_matrix(&mut buf, ARTICLE_MAGIC, &m).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 8);
        assert_eq!(&buf[..4], b"AENC");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &3u32.to_le_bytes());
        assert_eq!(&buf[12..16], &2u32.to_le_bytes());
        assert_eq!(&buf[16..24], &1.0f64.to_le_bytes());
        assert_eq!(&buf[24..32], &(-2.5f64).to_le_bytes());
        assert_eq!(read_matrix(buf.as_slice(), ARTICLE_MAGIC).unwrap(), m);
        assert!(read_matrix(buf.as_slice(), FEATURE_MAGIC).is_err());
        assert!(read_matrix(&buf[..30], ARTICLE_MAGIC).is_err());
    }
}
