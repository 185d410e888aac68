//! Little-endian primitives and the checksummed container shared by the
//! index and encoder files.
//!
//! Container layout: 8-byte magic, `u32` format version, `u64` payload
//! length, payload, `u32` CRC-32 of the payload.

use crate::error::FormatError;

const HEADER_LEN: usize = 8 + 4 + 8;

#[derive(Debug, Default)]
pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
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

    pub fn len_u32(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("length fits in u32"));
    }

    pub fn str(&mut self, s: &str) {
        self.len_u32(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn strings<S: AsRef<str>>(&mut self, items: &[S]) {
        self.len_u32(items.len());
        for s in items {
            self.str(s.as_ref());
        }
    }

    /// Appends a `u64`-length-prefixed section.
    pub fn section(&mut self, body: ByteWriter) {
        self.u64(body.buf.len() as u64);
        self.buf.extend_from_slice(&body.buf);
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8], what: &'static str) -> Self {
        Self { buf, pos: 0, what }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            FormatError::malformed(self.what, format!("needs {n} bytes at offset {}, {} left", self.pos, self.buf.len() - self.pos))
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        Ok(self.take(N)?.try_into().expect("slice of length N"))
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn len_u32(&mut self) -> Result<usize, FormatError> {
        Ok(self.u32()? as usize)
    }

    pub fn str(&mut self) -> Result<String, FormatError> {
        let n = self.len_u32()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|e| FormatError::malformed(self.what, e.to_string()))
    }

    pub fn strings(&mut self) -> Result<Vec<String>, FormatError> {
        let n = self.len_u32()?;
        (0..n).map(|_| self.str()).collect()
    }

    /// Reads a `u64`-length-prefixed section and returns a reader over it.
    pub fn section(&mut self, what: &'static str) -> Result<ByteReader<'a>, FormatError> {
        let n = usize::try_from(self.u64()?).map_err(|_| FormatError::malformed(self.what, "section too large"))?;
        Ok(ByteReader::new(self.take(n)?, what))
    }

    pub fn finish(self) -> Result<(), FormatError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(FormatError::malformed(self.what, format!("{} trailing bytes", self.buf.len() - self.pos)))
        }
    }
}

pub(crate) fn frame(magic: &[u8; 8], version: u32, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    out
}

/// Validates magic, version, length and checksum; returns the payload.
pub(crate) fn unframe<'a>(
    bytes: &'a [u8],
    magic: &[u8; 8],
    version: u32,
    wrong_magic: FormatError,
) -> Result<&'a [u8], FormatError> {
    if bytes.len() < magic.len() || &bytes[..magic.len()] != magic {
        return Err(wrong_magic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated { expected: HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    let found = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if found != version {
        return Err(FormatError::UnsupportedVersion { found, supported: version });
    }
    let payload_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let expected = (HEADER_LEN as u64).saturating_add(payload_len).saturating_add(4);
    if (bytes.len() as u64) < expected {
        return Err(FormatError::Truncated { expected, found: bytes.len() as u64 });
    }
    if (bytes.len() as u64) > expected {
        return Err(FormatError::malformed("container", format!("{} bytes after checksum", bytes.len() as u64 - expected)));
    }
    let end = HEADER_LEN + payload_len as usize;
    let payload = &bytes[HEADER_LEN..end];
    let stored = u32::from_le_bytes(bytes[end..end + 4].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(FormatError::ChecksumMismatch { stored, computed });
    }
    Ok(payload)
}
