//! On-disk layout, little-endian:
//!
//! ```text
//! "MEV1" | dim: u32 | rows: u64 | rows × (len: u32, UTF-8 id bytes) | rows × dim f64
//! ```

use std::path::Path;

use super::EmbeddingMatrix;
use crate::binfmt::{read_file, write_atomic, LeReader, LeWriter};
use crate::error::{Error, Result};

pub const STORE_MAGIC: &[u8; 4] = b"MEV1";

pub fn encode_store(m: &EmbeddingMatrix) -> Result<Vec<u8>> {
    let dim = u32::try_from(m.dim()).map_err(|_| Error::invalid("dim exceeds u32"))?;
    let id_bytes: usize = m.ids().iter().map(|s| 4 + s.len()).sum();
    let mut w = LeWriter::with_capacity(16 + id_bytes + m.values().len() * 8);
    w.bytes(STORE_MAGIC);
    w.u32(dim);
    w.u64(m.rows() as u64);
    for id in m.ids() {
        w.string(id)?;
    }
    w.f64s(m.values());
    Ok(w.into_inner())
}

pub fn decode_store(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let mut r = LeReader::new(bytes);
    r.magic(STORE_MAGIC)?;
    let dim = r.u32()? as u64;
    let rows = r.u64()?;
    // Each id needs at least its 4-byte length prefix.
    if rows > r.remaining() as u64 / 4 {
        return Err(Error::Truncated {
            expected: (r.position() as u64).saturating_add(rows.saturating_mul(4)),
            actual: bytes.len() as u64,
        });
    }
    let mut ids = Vec::with_capacity(rows as usize);
    for _ in 0..rows {
        ids.push(r.string()?);
    }
    let count = rows.checked_mul(dim).ok_or_else(|| Error::invalid("rows × dim overflows"))?;
    let values = r.f64s(count)?;
    r.finish()?;
    EmbeddingMatrix::new(ids, dim as usize, values)
}

/// Writes atomically (temp file in the same directory, then rename).
pub fn write_store(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    write_atomic(path, &encode_store(m)?)
}

pub fn read_store(path: &Path) -> Result<EmbeddingMatrix> {
    decode_store(&read_file(path)?)
}
