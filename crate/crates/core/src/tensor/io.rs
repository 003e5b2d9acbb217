//! Binary tensor files: `"SPKT"`, then version, order and dimension as
//! little-endian `u32`, then `d^k` little-endian `f64` values in flat order.

use std::io::{Read, Write};

use super::{element_count, DenseTensor, DEFAULT_ELEMENT_BUDGET};
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"SPKT";
pub const TENSOR_VERSION: u32 = 1;

pub fn write_tensor<W: Write>(mut out: W, t: &DenseTensor) -> Result<()> {
    out.write_all(TENSOR_MAGIC)?;
    out.write_all(&TENSOR_VERSION.to_le_bytes())?;
    out.write_all(&(t.order() as u32).to_le_bytes())?;
    out.write_all(&(t.dim() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(t.len() * 8);
    for x in t.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor<R: Read>(mut input: R) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut input)?;
    if version != TENSOR_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let order = read_u32(&mut input)? as usize;
    let dim = read_u32(&mut input)? as usize;
    let len = element_count(order, dim, DEFAULT_ELEMENT_BUDGET)?;
    let mut bytes = vec![0u8; len * 8];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DenseTensor::from_vec(order, dim, data)
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
