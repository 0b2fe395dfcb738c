//! Little-endian binary layout for parameter checkpoints.
//!
//! Layout: `u32` format version, `u32` tensor count, then per tensor
//! `u32` rows, `u32` cols, `rows*cols` IEEE-754 `f64` values in row-major
//! order. Everything little-endian; round trips are bit-exact.

use std::fmt;
use std::io::{self, Read, Write};

use super::tensor::Tensor2;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CheckpointError {
    Io(io::Error),
    BadVersion(u32),
    Truncated,
}

impl fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointError::Io(e) => write!(f, "checkpoint io error: {e}"),
            CheckpointError::BadVersion(v) => write!(f, "unsupported checkpoint version {v}"),
            CheckpointError::Truncated => write!(f, "checkpoint data truncated"),
        }
    }
}

impl std::error::Error for CheckpointError {}

impl From<io::Error> for CheckpointError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            CheckpointError::Truncated
        } else {
            CheckpointError::Io(e)
        }
    }
}

pub fn write_tensors<W: Write>(w: &mut W, tensors: &[&Tensor2]) -> io::Result<()> {
    w.write_all(&CHECKPOINT_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        w.write_all(&(t.rows() as u32).to_le_bytes())?;
        w.write_all(&(t.cols() as u32).to_le_bytes())?;
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_tensors<R: Read>(r: &mut R) -> Result<Vec<Tensor2>, CheckpointError> {
    let version = read_u32(r)?;
    if version != CHECKPOINT_FORMAT_VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let count = read_u32(r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = read_u32(r)? as usize;
        let cols = read_u32(r)? as usize;
        let mut data = vec![0.0f64; rows * cols];
        let mut buf = [0u8; 8];
        for v in &mut data {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        tensors.push(Tensor2::from_vec(rows, cols, data).expect("sized above"));
    }
    Ok(tensors)
}
