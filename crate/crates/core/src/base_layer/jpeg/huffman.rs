//! Canonical Huffman code construction (T.81 Annex C) and decoding.

use crate::error::{Error, Result};

/// Encoder lookup: code and length per symbol value.
#[derive(Debug, Clone)]
pub struct EncodeTable {
    codes: [u16; 256],
    sizes: [u8; 256],
}

impl EncodeTable {
    pub fn new(bits: &[u8; 16], values: &[u8]) -> Self {
        let mut codes = [0u16; 256];
        let mut sizes = [0u8; 256];
        let mut code = 0u16;
        let mut k = 0;
        for (i, &count) in bits.iter().enumerate() {
            for _ in 0..count {
                let sym = values[k] as usize;
                codes[sym] = code;
                sizes[sym] = (i + 1) as u8;
                code += 1;
                k += 1;
            }
            code <<= 1;
        }
        EncodeTable { codes, sizes }
    }

    #[inline]
    pub fn get(&self, symbol: u8) -> (u16, u8) {
        let s = symbol as usize;
        debug_assert!(self.sizes[s] > 0, "symbol {symbol:#x} has no code");
        (self.codes[s], self.sizes[s])
    }
}

/// Decoder tables in the MAXCODE/VALPTR form of T.81 F.2.2.3.
#[derive(Debug, Clone)]
pub struct DecodeTable {
    maxcode: [i32; 17],
    mincode: [i32; 17],
    valptr: [usize; 17],
    values: Vec<u8>,
}

impl DecodeTable {
    pub fn new(bits: &[u8; 16], values: &[u8]) -> Result<Self> {
        let total: usize = bits.iter().map(|&b| b as usize).sum();
        if total != values.len() || total > 256 {
            return Err(Error::corrupt("huffman table", "symbol count mismatch"));
        }
        let mut maxcode = [-1i32; 17];
        let mut mincode = [0i32; 17];
        let mut valptr = [0usize; 17];
        let mut code = 0i32;
        let mut k = 0usize;
        for len in 1..=16 {
            let count = bits[len - 1] as i32;
            if count > 0 {
                valptr[len] = k;
                mincode[len] = code;
                code += count;
                k += count as usize;
                maxcode[len] = code - 1;
            }
            if code > 1 << len {
                return Err(Error::corrupt("huffman table", "code space overflow"));
            }
            code <<= 1;
        }
        Ok(DecodeTable {
            maxcode,
            mincode,
            valptr,
            values: values.to_vec(),
        })
    }

    /// Decodes one symbol, pulling bits one at a time from `next_bit`.
    pub fn decode(&self, mut next_bit: impl FnMut() -> Result<u32>) -> Result<u8> {
        let mut code = next_bit()? as i32;
        for len in 1..=16 {
            if code <= self.maxcode[len] {
                let idx = self.valptr[len] + (code - self.mincode[len]) as usize;
                return Ok(self.values[idx]);
            }
            if len < 16 {
                code = (code << 1) | next_bit()? as i32;
            }
        }
        Err(Error::corrupt("entropy data", "invalid huffman code"))
    }
}

#[cfg(test)]
mod tests {
    use super::super::tables::*;
    use super::*;

    #[test]
    fn known_luma_dc_codes() {
        let t = EncodeTable::new(&DC_LUMA_BITS, &DC_VALUES);
        assert_eq!(t.get(0), (0b00, 2));
        assert_eq!(t.get(1), (0b010, 3));
        assert_eq!(t.get(5), (0b110, 3));
        assert_eq!(t.get(6), (0b1110, 4));
        assert_eq!(t.get(11), (0b1_1111_1110, 9));
    }

    #[test]
    fn encode_decode_agree() {
        for (bits, vals) in [
            (&DC_LUMA_BITS, &DC_VALUES[..]),
            (&DC_CHROMA_BITS, &DC_VALUES[..]),
            (&AC_LUMA_BITS, &AC_LUMA_VALUES[..]),
            (&AC_CHROMA_BITS, &AC_CHROMA_VALUES[..]),
        ] {
            let enc = EncodeTable::new(bits, vals);
            let dec = DecodeTable::new(bits, vals).unwrap();
            for &sym in vals {
                let (code, len) = enc.get(sym);
                let mut i = len;
                let got = dec
                    .decode(|| {
                        i -= 1;
                        Ok(u32::from((code >> i) & 1))
                    })
                    .unwrap();
                assert_eq!(got, sym);
            }
        }
    }

    #[test]
    fn rejects_bad_tables() {
        let mut bits = [0u8; 16];
        bits[0] = 3;
        assert!(DecodeTable::new(&bits, &[0, 1, 2]).is_err());
        assert!(DecodeTable::new(&DC_LUMA_BITS, &DC_VALUES[..5]).is_err());
    }
}
