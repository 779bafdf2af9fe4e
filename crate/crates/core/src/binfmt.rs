//! Little-endian container helpers shared by the embedding store and the
//! encoder checkpoint format.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Append-only little-endian byte buffer.
#[derive(Default)]
pub struct LeWriter {
    buf: Vec<u8>,
}

impl LeWriter {
    pub fn with_capacity(n: usize) -> Self {
        LeWriter { buf: Vec::with_capacity(n) }
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        self.buf.reserve(vs.len() * 8);
        for v in vs {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    /// u32 byte length followed by the UTF-8 bytes.
    pub fn string(&mut self, s: &str) -> Result<()> {
        let len =
            u32::try_from(s.len()).map_err(|_| Error::invalid(format!("string of {} bytes is too long", s.len())))?;
        self.u32(len);
        self.bytes(s.as_bytes());
        Ok(())
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

/// Cursor over a byte slice. Every read that runs past the end reports the
/// total byte count the file would need versus what it has.
pub struct LeReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> LeReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        LeReader { data, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated { expected: self.pos as u64 + n as u64, actual: self.data.len() as u64 });
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let found = &self.data[..self.data.len().min(4)];
        if found != expected {
            return Err(Error::BadMagic { expected: *expected, found: found.to_vec() });
        }
        self.pos = 4;
        Ok(())
    }

    pub fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let at = self.pos;
        let b = self.take(len)?;
        String::from_utf8(b.to_vec()).map_err(|e| Error::invalid(format!("invalid UTF-8 in id at byte {at}: {e}")))
    }

    /// Reads `n` doubles. The size check happens before allocating.
    pub fn f64s(&mut self, n: u64) -> Result<Vec<f64>> {
        let bytes = n.checked_mul(8).ok_or_else(|| Error::invalid("value count overflows"))?;
        if (self.remaining() as u64) < bytes {
            return Err(Error::Truncated { expected: self.pos as u64 + bytes, actual: self.data.len() as u64 });
        }
        let b = self.take(bytes as usize)?;
        Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::invalid(format!("{} trailing bytes after payload", self.remaining())));
        }
        Ok(())
    }
}

/// Writes `bytes` to a temp file in the destination directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
