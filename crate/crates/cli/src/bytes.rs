//! Little-endian readers and writers for the binary artifacts.

use anyhow::{bail, ensure, Result};

#[derive(Default)]
pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("artifact sections stay below 4 GiB"));
    }

    /// Length-prefixed UTF-8.
    pub fn str(&mut self, s: &str) {
        self.len(s.len());
        self.bytes(s.as_bytes());
    }
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let Some(end) = self.pos.checked_add(n).filter(|&e| e <= self.data.len()) else {
            bail!("truncated at byte {}: need {n} more", self.pos)
        };
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    /// A `u32` count that must fit in the remaining bytes at `unit` bytes
    /// per item, so a corrupt count cannot trigger a huge allocation.
    pub fn count(&mut self, unit: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        ensure!(n.saturating_mul(unit) <= self.remaining(), "count {n} at byte {} exceeds the file", self.pos - 4);
        Ok(n)
    }

    pub fn str(&mut self) -> Result<&'a str> {
        let n = self.count(1)?;
        Ok(std::str::from_utf8(self.take(n)?)?)
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn finish(&self) -> Result<()> {
        ensure!(self.remaining() == 0, "{} trailing bytes", self.remaining());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_truncation() {
        let mut w = Writer::default();
        w.u32(7);
        w.u64(u64::MAX - 1);
        w.f32(-0.5);
        w.str("kick");
        let mut r = Reader::new(&w.buf);
        assert_eq!(r.u32().unwrap(), 7);
        assert_eq!(r.u64().unwrap(), u64::MAX - 1);
        assert_eq!(r.f32().unwrap(), -0.5);
        assert_eq!(r.str().unwrap(), "kick");
        r.finish().unwrap();
        let mut short = Reader::new(&w.buf[..10]);
        short.u32().unwrap();
        assert!(short.u64().is_err());
        let mut bogus = Reader::new(&[255, 255, 255, 255, 1]);
        assert!(bogus.count(1).is_err());
    }
}
