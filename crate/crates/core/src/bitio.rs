//! MSB-first bit packing shared by the lossless backends.

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `count` bits of `value`, most significant first.
    pub fn write(&mut self, value: u32, count: u32) {
        debug_assert!(count <= 32);
        if count == 0 {
            return;
        }
        let masked = u64::from(value) & ((1u64 << count) - 1);
        self.acc = (self.acc << count) | masked;
        self.nbits += count;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.out.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    pub fn write_bit(&mut self, bit: bool) {
        self.write(u32::from(bit), 1);
    }

    /// Flushes the partial byte, zero padded.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.out.push((self.acc << (8 - self.nbits)) as u8);
        }
        self.out
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u64,
    nbits: u32,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        BitReader {
            data,
            pos: 0,
            acc: 0,
            nbits: 0,
        }
    }

    fn refill(&mut self) {
        while self.nbits <= 56 && self.pos < self.data.len() {
            self.acc = (self.acc << 8) | u64::from(self.data[self.pos]);
            self.pos += 1;
            self.nbits += 8;
        }
    }

    pub fn read(&mut self, count: u32) -> Result<u32> {
        debug_assert!(count <= 32);
        if count == 0 {
            return Ok(0);
        }
        if self.nbits < count {
            self.refill();
            if self.nbits < count {
                return Err(Error::Truncated("bit stream"));
            }
        }
        self.nbits -= count;
        let v = (self.acc >> self.nbits) & ((1u64 << count) - 1);
        Ok(v as u32)
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        self.read(1).map(|b| b == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packs_msb_first() {
        let mut w = BitWriter::new();
        for (v, n) in [(0, 2), (1, 2), (1, 2), (2, 2)] {
            w.write(v, n);
        }
        assert_eq!(w.finish(), [0b0001_0110]);

        let mut w = BitWriter::new();
        w.write(0b101, 3);
        assert_eq!(w.finish(), [0b1010_0000]);
    }

    #[test]
    fn reads_back_mixed_widths() {
        let fields = [
            (5u32, 3u32),
            (0x1ffff, 17),
            (0, 1),
            (0xdead_beef, 32),
            (1, 1),
        ];
        let mut w = BitWriter::new();
        for &(v, n) in &fields {
            w.write(v, n);
        }
        let bytes = w.finish();
        let mut r = BitReader::new(&bytes);
        for &(v, n) in &fields {
            assert_eq!(r.read(n).unwrap(), v);
        }
        // 54 bits used, 2 bits of padding, then nothing.
        assert_eq!(r.read(2).unwrap(), 0);
        assert!(r.read(1).is_err());
    }
}
