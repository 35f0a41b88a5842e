//! Binary tensor and mask files.
//!
//! Tensor: `b"TNSR"`, version `u16`, order `u32`, one `u64` per mode, then
//! the entries as `f64`, first index fastest. Mask: `b"MASK"`, version
//! `u16`, order `u32`, the shape as `u64`s, the count as `u64`, then the
//! sorted linear indices as `u64`. Everything is little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use trmv_core::{DenseTensor, Matrix, ObservationMask};

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"TNSR";
pub const MASK_MAGIC: &[u8; 4] = b"MASK";
pub const FORMAT_VERSION: u16 = 1;

const MAX_ORDER: u32 = 64;

pub fn write_tensor<W: Write>(w: &mut W, t: &DenseTensor) -> std::io::Result<()> {
    w.write_all(TENSOR_MAGIC)?;
    write_shape(w, t.shape())?;
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<DenseTensor> {
    expect_magic(r, TENSOR_MAGIC, "tensor")?;
    let shape = read_shape(r, "tensor")?;
    let n = entry_count(&shape, "tensor")?;
    let mut data = Vec::with_capacity(n.min(1 << 24));
    let mut buf = [0u8; 8];
    for _ in 0..n {
        read_exact(r, &mut buf, "tensor")?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(DenseTensor::new(shape, data)?)
}

pub fn tensor_bytes(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * (t.order() + t.len()));
    write_tensor(&mut out, t).expect("writing to memory");
    out
}

pub fn write_mask<W: Write>(w: &mut W, m: &ObservationMask) -> std::io::Result<()> {
    w.write_all(MASK_MAGIC)?;
    write_shape(w, m.shape())?;
    w.write_all(&(m.count() as u64).to_le_bytes())?;
    for &i in m.indices() {
        w.write_all(&(i as u64).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_mask<R: Read>(r: &mut R) -> Result<ObservationMask> {
    expect_magic(r, MASK_MAGIC, "mask")?;
    let shape = read_shape(r, "mask")?;
    let total = entry_count(&shape, "mask")?;
    let count = read_u64(r, "mask")? as usize;
    if count > total {
        return Err(Error::format("mask", format!("{count} indices for {total} entries")));
    }
    let mut indices = Vec::with_capacity(count);
    for _ in 0..count {
        indices.push(read_u64(r, "mask")? as usize);
    }
    Ok(ObservationMask::new(shape, indices)?)
}

pub fn mask_bytes(m: &ObservationMask) -> Vec<u8> {
    let mut out = Vec::new();
    write_mask(&mut out, m).expect("writing to memory");
    out
}

pub fn save_tensor(path: &Path, t: &DenseTensor) -> Result<()> {
    write_file(path, |w| write_tensor(w, t))
}

pub fn load_tensor(path: &Path) -> Result<DenseTensor> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_tensor(&mut r)
}

pub fn save_mask(path: &Path, m: &ObservationMask) -> Result<()> {
    write_file(path, |w| write_mask(w, m))
}

pub fn load_mask(path: &Path) -> Result<ObservationMask> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_mask(&mut r)
}

pub fn matrix_to_tensor(m: &Matrix) -> Result<DenseTensor> {
    Ok(DenseTensor::from_matrix(m)?)
}

pub fn tensor_to_matrix(t: &DenseTensor) -> Result<Matrix> {
    if t.order() != 2 {
        return Err(Error::format("matrix", format!("order {} tensor", t.order())));
    }
    Ok(Matrix::from_column_slice(t.shape()[0], t.shape()[1], t.data()))
}

pub(crate) fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_shape<W: Write>(w: &mut W, shape: &[usize]) -> std::io::Result<()> {
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &d in shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    Ok(())
}

fn read_shape<R: Read>(r: &mut R, what: &'static str) -> Result<Vec<usize>> {
    let mut v = [0u8; 2];
    read_exact(r, &mut v, what)?;
    let version = u16::from_le_bytes(v);
    if version != FORMAT_VERSION {
        return Err(Error::format(what, format!("unsupported version {version}")));
    }
    let mut o = [0u8; 4];
    read_exact(r, &mut o, what)?;
    let order = u32::from_le_bytes(o);
    if order == 0 || order > MAX_ORDER {
        return Err(Error::format(what, format!("order {order}")));
    }
    (0..order)
        .map(|_| read_u64(r, what).map(|d| d as usize))
        .collect()
}

fn entry_count(shape: &[usize], what: &'static str) -> Result<usize> {
    shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::format(what, format!("shape {shape:?}")))
}

fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4], what: &'static str) -> Result<()> {
    let mut m = [0u8; 4];
    read_exact(r, &mut m, what)?;
    if &m != magic {
        return Err(Error::format(what, format!("bad magic {m:?}")));
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R, what: &'static str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::format(what, format!("truncated: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_layout() {
        let t = DenseTensor::new(vec![2, 1], vec![1.5, -2.0]).unwrap();
        let b = tensor_bytes(&t);
        let mut want = b"TNSR".to_vec();
        want.extend([1, 0, 2, 0, 0, 0]);
        want.extend(2u64.to_le_bytes());
        want.extend(1u64.to_le_bytes());
        want.extend(1.5f64.to_le_bytes());
        want.extend((-2.0f64).to_le_bytes());
        assert_eq!(b, want);
        assert_eq!(read_tensor(&mut b.as_slice()).unwrap(), t);
    }

    #[test]
    fn mask_roundtrip_and_rejects() {
        let m = ObservationMask::new(vec![3, 2], vec![0, 4, 5]).unwrap();
        let b = mask_bytes(&m);
        assert_eq!(b.len(), 4 + 2 + 4 + 16 + 8 + 24);
        assert_eq!(read_mask(&mut b.as_slice()).unwrap(), m);

        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(read_mask(&mut bad.as_slice()), Err(Error::Format { .. })));
        assert!(read_mask(&mut &b[..b.len() - 3]).is_err());
        let mut unsorted = b.clone();
        let n = unsorted.len();
        unsorted[n - 16..n - 8].copy_from_slice(&9u64.to_le_bytes());
        assert!(read_mask(&mut unsorted.as_slice()).is_err());
        assert!(read_tensor(&mut b.as_slice()).is_err());
    }

    #[test]
    fn matrix_conversion() {
        let m = Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
        let t = matrix_to_tensor(&m).unwrap();
        assert_eq!(t.get(&[2, 1]), 5.0);
        assert_eq!(tensor_to_matrix(&t).unwrap(), m);
    }
}
