//! Checkpoint archive: a flat map from parameter paths to shaped f64 blobs.
//!
//! Layout (all integers and floats little-endian):
//!   magic   b"PCVD-CKPT-1\n"
//!   u64     entry count
//!   entry*  u64 name length, name bytes (utf-8),
//!           u64 rank, u64 * rank extents,
//!           f64 * product(extents) values
//!
//! Round trips are bit-exact; readers reject unknown magics and report the
//! byte offset of any truncation.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 12] = b"PCVD-CKPT-1\n";

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn write_checkpoint(path: &Path, entries: &[(String, Tensor)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(entries.len() as u64).to_le_bytes())?;
    for (name, t) in entries {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u64).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(t.shape().len() as u64).to_le_bytes())?;
        for &e in t.shape() {
            w.write_all(&(e as u64).to_le_bytes())?;
        }
        for &v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Cursor<R> {
    inner: R,
    offset: usize,
}

impl<R: Read> Cursor<R> {
    fn exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|_| {
            Error::Format(format!(
                "checkpoint truncated at byte offset {}",
                self.offset
            ))
        })?;
        self.offset += buf.len();
        Ok(())
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<CheckpointEntry>> {
    let mut c = Cursor {
        inner: BufReader::new(File::open(path)?),
        offset: 0,
    };
    let mut magic = [0u8; 12];
    c.exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "checkpoint version mismatch: expected {:?}, found {:?}",
            String::from_utf8_lossy(MAGIC).trim_end(),
            String::from_utf8_lossy(&magic)
        )));
    }
    let count = c.u64()? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = c.u64()? as usize;
        let mut name_buf = vec![0u8; name_len];
        c.exact(&mut name_buf)?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| Error::Format(format!("non-utf8 name at offset {}", c.offset)))?;
        let rank = c.u64()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(c.u64()? as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(c.f64()?);
        }
        entries.push(CheckpointEntry { name, shape, data });
    }
    Ok(entries)
}
