//! Little-endian binary container for coefficient pyramids.
//!
//! Layout:
//!
//! ```text
//! magic      4 bytes  "HLMP"
//! version    u32
//! alpha      f64
//! hf_depth   u32
//! lf_depth   u32
//! mode       u8       0 = consistent, 1 = independent
//! seed       u64
//! hf_res     u32
//! lf_res     u32
//! z1         f64
//! hf rows    f64 × 2^j            for j = 0, …, hf_depth-1
//! lf rows    f64 × 2^(lf-|j|)     for j = 1-lf_depth, …, lf_depth-1
//! ```

use std::io::{Read, Write};

use super::pyramid::{lf_row_len, lf_row_range};
use super::{CoefficientMode, CoefficientPyramid};
use crate::error::{Error, Result};

pub const PYRAMID_MAGIC: [u8; 4] = *b"HLMP";
pub const PYRAMID_VERSION: u32 = 1;

const MAX_DEPTH: usize = 40;

pub fn write_pyramid<W: Write>(pyramid: &CoefficientPyramid, mut out: W) -> Result<()> {
    out.write_all(&PYRAMID_MAGIC)?;
    out.write_all(&PYRAMID_VERSION.to_le_bytes())?;
    out.write_all(&pyramid.alpha.to_le_bytes())?;
    out.write_all(&(pyramid.hf_depth as u32).to_le_bytes())?;
    out.write_all(&(pyramid.lf_depth as u32).to_le_bytes())?;
    let mode: u8 = match pyramid.mode {
        CoefficientMode::Consistent => 0,
        CoefficientMode::Independent => 1,
    };
    out.write_all(&[mode])?;
    out.write_all(&pyramid.seed.to_le_bytes())?;
    out.write_all(&(pyramid.hf_resolution as u32).to_le_bytes())?;
    out.write_all(&(pyramid.lf_resolution as u32).to_le_bytes())?;
    out.write_all(&pyramid.z1.to_le_bytes())?;
    for row in pyramid.hf.iter().chain(&pyramid.lf) {
        let mut buf = Vec::with_capacity(row.len() * 8);
        for x in row {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated pyramid container: {e}")))?;
    Ok(buf)
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    read_array::<4, _>(input).map(u32::from_le_bytes)
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    read_array::<8, _>(input).map(u64::from_le_bytes)
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    read_array::<8, _>(input).map(f64::from_le_bytes)
}

fn read_row<R: Read>(input: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; len * 8];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated pyramid container: {e}")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn read_pyramid<R: Read>(mut input: R) -> Result<CoefficientPyramid> {
    let magic = read_array::<4, _>(&mut input)?;
    if magic != PYRAMID_MAGIC {
        return Err(Error::Format("not a pyramid container (bad magic)".into()));
    }
    let version = read_u32(&mut input)?;
    if version != PYRAMID_VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let alpha = read_f64(&mut input)?;
    let hf_depth = read_u32(&mut input)? as usize;
    let lf_depth = read_u32(&mut input)? as usize;
    if hf_depth > MAX_DEPTH || lf_depth > MAX_DEPTH {
        return Err(Error::Format(format!("implausible depths ({hf_depth}, {lf_depth})")));
    }
    let mode = match read_array::<1, _>(&mut input)?[0] {
        0 => CoefficientMode::Consistent,
        1 => CoefficientMode::Independent,
        other => return Err(Error::Format(format!("unknown mode byte {other}"))),
    };
    let seed = read_u64(&mut input)?;
    let hf_res = read_u32(&mut input)? as usize;
    let lf_res = read_u32(&mut input)? as usize;
    let z1 = read_f64(&mut input)?;
    let hf = (0..hf_depth)
        .map(|j| read_row(&mut input, 1 << j))
        .collect::<Result<Vec<_>>>()?;
    let lf = lf_row_range(lf_depth)
        .map(|j| read_row(&mut input, lf_row_len(lf_depth, j)))
        .collect::<Result<Vec<_>>>()?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after pyramid".into()));
    }
    CoefficientPyramid::from_parts(alpha, hf_depth, lf_depth, hf, lf, z1, mode, seed, hf_res, lf_res)
}
