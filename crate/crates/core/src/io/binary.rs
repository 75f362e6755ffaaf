//! Little-endian helpers for the `TF**` binary formats.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn with_magic(magic: &[u8; 4]) -> Self {
        let mut w = ByteWriter::default();
        w.buf.extend_from_slice(magic);
        w.u32(FORMAT_VERSION);
        w
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, values: &[f64]) {
        values.iter().for_each(|&v| self.f64(v));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

/// Cursor that reports the byte offset of any malformed or missing field.
pub struct ByteReader<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: PathBuf,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8], path: &Path) -> Self {
        ByteReader {
            bytes,
            offset: 0,
            path: path.to_path_buf(),
        }
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::data(&self.path, format!("byte offset {}", self.offset), message)
    }

    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.offset + N;
        if end > self.bytes.len() {
            return Err(self.error(format!(
                "truncated payload: need {N} bytes for {what}, {} available",
                self.bytes.len() - self.offset
            )));
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[self.offset..end]);
        self.offset = end;
        Ok(out)
    }

    /// Checks magic bytes and format version.
    pub fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.take("magic")?;
        if &found != magic {
            self.offset -= 4;
            return Err(self.error(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&found),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u32("format version")?;
        if version != FORMAT_VERSION {
            self.offset -= 4;
            return Err(self.error(format!("unsupported format version {version}")));
        }
        Ok(())
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        self.take::<4>(what).map(u32::from_le_bytes)
    }

    pub fn f32(&mut self, what: &str) -> Result<f32> {
        self.take::<4>(what).map(f32::from_le_bytes)
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        self.take::<8>(what).map(f64::from_le_bytes)
    }

    pub fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        self.require(count.saturating_mul(8), what)?;
        (0..count).map(|_| self.f64(what)).collect()
    }

    /// Fails up front if fewer than `len` bytes remain.
    pub fn require(&self, len: usize, what: &str) -> Result<()> {
        let available = self.bytes.len() - self.offset;
        if available < len {
            return Err(self.error(format!(
                "truncated payload: need {len} bytes for {what}, {available} available"
            )));
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        if self.offset != self.bytes.len() {
            return Err(self.error(format!("{} trailing bytes", self.bytes.len() - self.offset)));
        }
        Ok(())
    }
}
