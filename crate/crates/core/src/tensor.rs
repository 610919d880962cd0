//! Portable tensor container.
//!
//! Little-endian: magic `b"TNNT"`, `u32` version, `u32` rank, `rank` x `u64`
//! dims, then `f32` data in row-major order. A file may hold several
//! records back to back.

use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{ArrayD, IxDyn};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TNNT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} need {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_f64(dims: Vec<usize>, data: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(dims, data.into_iter().map(|v| v as f32).collect())
    }

    pub fn to_array(&self) -> ArrayD<f64> {
        ArrayD::from_shape_vec(IxDyn(&self.dims), self.data.iter().map(|&v| v as f64).collect())
            .expect("dims checked on construction")
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(self.dims.len() as u32)?;
        for &d in &self.dims {
            w.write_u64::<LittleEndian>(d as u64)?;
        }
        for &v in &self.data {
            w.write_f32::<LittleEndian>(v)?;
        }
        Ok(())
    }

    /// Reads one record; `Ok(None)` at a clean end of input.
    pub fn read_next<R: Read>(mut r: R) -> Result<Option<Self>> {
        let mut magic = [0u8; 4];
        let mut got = 0;
        while got < 4 {
            match r.read(&mut magic[got..])? {
                0 if got == 0 => return Ok(None),
                0 => return Err(Error::TruncatedFile("tensor magic".into())),
                k => got += k,
            }
        }
        if magic != MAGIC {
            return Err(Error::BadMagic { found: u32::from_be_bytes(magic), expected: u32::from_be_bytes(MAGIC) });
        }
        let truncated = |what: &str| {
            let what = what.to_string();
            move |e: io::Error| {
                if e.kind() == io::ErrorKind::UnexpectedEof {
                    Error::TruncatedFile(what)
                } else {
                    Error::Io(e)
                }
            }
        };
        let version = r.read_u32::<LittleEndian>().map_err(truncated("tensor version"))?;
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported tensor version {version}")));
        }
        let rank = r.read_u32::<LittleEndian>().map_err(truncated("tensor rank"))? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.read_u64::<LittleEndian>().map_err(truncated("tensor dims"))? as usize);
        }
        let count: usize = dims.iter().product();
        let mut data = vec![0f32; count];
        r.read_f32_into::<LittleEndian>(&mut data).map_err(truncated("tensor data"))?;
        Ok(Some(Self { dims, data }))
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        Self::read_next(r)?.ok_or_else(|| Error::TruncatedFile("empty tensor file".into()))
    }

    pub fn read_all<R: Read>(mut r: R) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        while let Some(t) = Self::read_next(&mut r)? {
            out.push(t);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte_layout() {
        let t = Tensor::new(vec![2], vec![1.0, -2.5]).unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let mut expected = b"TNNT".to_vec();
        expected.extend(1u32.to_le_bytes());
        expected.extend(1u32.to_le_bytes());
        expected.extend(2u64.to_le_bytes());
        expected.extend(1.0f32.to_le_bytes());
        expected.extend((-2.5f32).to_le_bytes());
        assert_eq!(buf, expected);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(Tensor::read(&b"XXXX\x01\0\0\0"[..]), Err(Error::BadMagic { .. })));
        let t = Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        buf.truncate(buf.len() - 2);
        assert!(matches!(Tensor::read(&buf[..]), Err(Error::TruncatedFile(_))));
    }

    #[test]
    fn shape_must_match_data() {
        assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_sequences(shapes in prop::collection::vec(prop::collection::vec(0usize..4, 0..4), 1..4)) {
            let tensors: Vec<Tensor> = shapes
                .iter()
                .map(|dims| {
                    let n: usize = dims.iter().product();
                    Tensor::new(dims.clone(), (0..n).map(|i| i as f32 * 0.5 - 1.0).collect()).unwrap()
                })
                .collect();
            let mut buf = Vec::new();
            for t in &tensors {
                t.write(&mut buf).unwrap();
            }
            prop_assert_eq!(Tensor::read_all(&buf[..]).unwrap(), tensors);
        }
    }
}
