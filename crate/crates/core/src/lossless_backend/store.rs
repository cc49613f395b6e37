use crate::bitio::{BitReader, BitWriter};
use crate::error::{Error, Result};

/// Payload bytes of a Store plane: `ceil(count * bits / 8)`.
pub fn store_payload_len(count: usize, bits: u8) -> usize {
    (count as u64 * u64::from(bits)).div_ceil(8) as usize
}

pub(super) fn encode(samples: &[u32], bits: u8) -> Vec<u8> {
    let mut w = BitWriter::new();
    for &s in samples {
        w.write(s, u32::from(bits));
    }
    w.finish()
}

pub(super) fn decode(payload: &[u8], count: u64, bits: u8) -> Result<Vec<u32>> {
    let expected = (count * u64::from(bits)).div_ceil(8);
    if payload.len() as u64 != expected {
        return Err(Error::corrupt(
            "store plane",
            format!("payload is {} bytes, expected {expected}", payload.len()),
        ));
    }
    let mut r = BitReader::new(payload);
    (0..count).map(|_| r.read(u32::from(bits))).collect()
}
