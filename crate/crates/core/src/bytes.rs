//! Little-endian cursor used by the binary decoders. Every read is bounds
//! checked and reports the byte offset on truncation.

use crate::error::{Error, Result};

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Corrupt {
                offset: self.pos as u64,
                message: format!("truncated {what}: need {n} bytes, {} left", self.remaining()),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let s = self.take(N, what)?;
        let mut out = [0u8; N];
        out.copy_from_slice(s);
        Ok(out)
    }

    pub fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array(what)?))
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array(what)?))
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Corrupt {
                offset: self.pos as u64,
                message: format!("{} trailing bytes", self.remaining()),
            });
        }
        Ok(())
    }
}

pub(crate) fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) const NAME_LEN: usize = 32;

/// Writes a zero-padded 32-byte UTF-8 name.
pub(crate) fn put_name(out: &mut Vec<u8>, name: &str) -> Result<()> {
    let b = name.as_bytes();
    if b.len() > NAME_LEN || b.contains(&0) {
        return Err(Error::Validation(format!(
            "scenario name `{name}` must be at most {NAME_LEN} bytes without NUL"
        )));
    }
    out.extend_from_slice(b);
    out.resize(out.len() + NAME_LEN - b.len(), 0);
    Ok(())
}

pub(crate) fn read_name(r: &mut ByteReader<'_>) -> Result<String> {
    let at = r.offset();
    let raw = r.take(NAME_LEN, "scenario name")?;
    let end = raw.iter().position(|&b| b == 0).unwrap_or(NAME_LEN);
    if raw[end..].iter().any(|&b| b != 0) {
        return Err(Error::Format(format!("scenario name at byte {at} is not zero-padded")));
    }
    std::str::from_utf8(&raw[..end])
        .map(str::to_owned)
        .map_err(|_| Error::Format(format!("scenario name at byte {at} is not UTF-8")))
}
