//! Binary tensor file of embedded traces, little endian:
//! magic `MMETNSR1`, then `u32` count, max length `L` and row width; per
//! sample a `u32`-prefixed UTF-8 id, `u8` label, `u32` family, `u16` year,
//! `u8` month, `u32` true length and `true_length × width` `f64` values.
//! Padding rows are implicit.

use std::io::{Read, Write};
use std::path::Path;

use mme_core::seqembed::{EmbeddedSequence, YearMonth};

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 8] = b"MMETNSR1";

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecord {
    pub id: String,
    pub y: u8,
    pub family: u32,
    pub timestamp: YearMonth,
    pub x: EmbeddedSequence,
}

pub fn write_tensors(mut w: impl Write, records: &[TensorRecord]) -> Result<()> {
    let (len, width) = records.first().map(|r| (r.x.max_len(), r.x.width())).unwrap_or((0, 0));
    w.write_all(TENSOR_MAGIC)?;
    for v in [records.len(), len, width] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    for r in records {
        if r.x.max_len() != len || r.x.width() != width {
            return Err(Error::Format("tensor records differ in shape".into()));
        }
        w.write_all(&(r.id.len() as u32).to_le_bytes())?;
        w.write_all(r.id.as_bytes())?;
        w.write_all(&[r.y])?;
        w.write_all(&r.family.to_le_bytes())?;
        w.write_all(&r.timestamp.year.to_le_bytes())?;
        w.write_all(&[r.timestamp.month])?;
        w.write_all(&(r.x.true_length() as u32).to_le_bytes())?;
        for v in &r.x.stored()[..r.x.true_length() * width] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated tensor file: {e}")))?;
    Ok(b)
}

fn u32_of(r: &mut impl Read) -> Result<usize> {
    Ok(u32::from_le_bytes(take(r)?) as usize)
}

pub fn read_tensors(mut r: impl Read) -> Result<Vec<TensorRecord>> {
    if &take::<8>(&mut r)? != TENSOR_MAGIC {
        return Err(Error::Format("not a tensor file".into()));
    }
    let (count, len, width) = (u32_of(&mut r)?, u32_of(&mut r)?, u32_of(&mut r)?);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = u32_of(&mut r)?;
        let mut id = vec![0u8; n];
        r.read_exact(&mut id).map_err(|e| Error::Format(e.to_string()))?;
        let id = String::from_utf8(id).map_err(|e| Error::Format(e.to_string()))?;
        let y = take::<1>(&mut r)?[0];
        let family = u32::from_le_bytes(take(&mut r)?);
        let year = u16::from_le_bytes(take(&mut r)?);
        let month = take::<1>(&mut r)?[0];
        let t = u32_of(&mut r)?;
        let mut data = Vec::with_capacity(t * width);
        for _ in 0..t * width {
            data.push(f64::from_le_bytes(take(&mut r)?));
        }
        out.push(TensorRecord {
            id,
            y,
            family,
            timestamp: YearMonth::new(year, month)?,
            x: EmbeddedSequence::from_matrix(data, width, len, t)?,
        });
    }
    Ok(out)
}

pub fn load_tensors(path: &Path) -> Result<Vec<TensorRecord>> {
    read_tensors(super::open(path)?)
}

pub fn save_tensors(path: &Path, records: &[TensorRecord]) -> Result<()> {
    let mut w = super::create(path)?;
    write_tensors(&mut w, records)?;
    w.flush().map_err(|e| Error::io(path, e))
}
