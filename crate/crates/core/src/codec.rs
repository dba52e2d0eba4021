//! Little-endian byte buffers shared by every on-disk format, plus the
//! payload checksum and atomic file replacement.

use std::fs;
use std::io::Write;
use std::path::Path;

use crc::{Crc, CRC_64_XZ};

use crate::error::{FormatError, Result};

const CHECKSUM: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

/// CRC-64/XZ. Any burst of up to 64 flipped bits is always detected.
pub fn checksum(bytes: &[u8]) -> u64 {
    CHECKSUM.checksum(bytes)
}

#[derive(Debug, Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_header(magic: &[u8; 4], version: u16) -> Self {
        let mut w = Self::new();
        w.bytes(magic);
        w.u16(version);
        w
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Appends the checksum of everything written after the 6-byte header.
    pub fn finish_with_checksum(mut self) -> Vec<u8> {
        let sum = checksum(&self.buf[6..]);
        self.u64(sum);
        self.buf
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug)]
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.remaining() < n {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - self.remaining(),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u16(&mut self) -> Result<u16, FormatError> {
        self.array().map(u16::from_le_bytes)
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        self.array().map(u32::from_le_bytes)
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        self.array().map(u64::from_le_bytes)
    }

    pub fn f32(&mut self) -> Result<f32, FormatError> {
        self.array().map(f32::from_le_bytes)
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        self.array().map(f64::from_le_bytes)
    }

    /// Checks magic and version, leaving the cursor at the first payload byte.
    pub fn expect_header(&mut self, magic: &[u8; 4], version: u16) -> Result<(), FormatError> {
        let found = self.take(4.min(self.remaining()))?;
        if found != magic {
            return Err(FormatError::BadMagic {
                expected: *magic,
                found: found.to_vec(),
            });
        }
        let v = self.u16()?;
        if v != version {
            return Err(FormatError::Version {
                expected: version,
                found: v,
            });
        }
        Ok(())
    }

    pub fn expect_end(&self) -> Result<(), FormatError> {
        if self.remaining() != 0 {
            return Err(FormatError::Corrupt(format!(
                "{} trailing bytes after payload",
                self.remaining()
            )));
        }
        Ok(())
    }
}

/// Validates header and trailing checksum of a checksummed file and returns a
/// reader over the payload alone (checksum stripped).
pub fn open_checksummed<'a>(
    bytes: &'a [u8],
    magic: &[u8; 4],
    version: u16,
) -> Result<ByteReader<'a>, FormatError> {
    let mut header = ByteReader::new(bytes);
    header.expect_header(magic, version)?;
    if bytes.len() < 6 + 8 {
        return Err(FormatError::Truncated {
            offset: bytes.len(),
            needed: 6 + 8 - bytes.len(),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8-byte tail"));
    let computed = checksum(&body[6..]);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed });
    }
    let mut reader = ByteReader::new(body);
    reader.pos = 6;
    Ok(reader)
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    Ok(fs::read(path)?)
}
