//! Median edge prediction with context-adaptive Golomb-Rice coding.
//!
//! Samples are visited in raster order. Missing neighbors are replaced so
//! that the first row predicts from the left, the first column from
//! above, and the origin from zero. The prediction error is zigzag mapped
//! and Rice coded with `k = floor(log2(A / N))` taken from the running
//! mean `A / N` of mapped errors in the sample's context. Contexts are
//! the bit length of the local gradient `|a - c| + |b - c|`; each keeps
//! its own counters, halved when `N` reaches [`HALVE_AT`]. All state is
//! reset per plane.
//!
//! A quotient of [`ESCAPE`] or more is sent as `ESCAPE` one bits followed
//! by the mapped error in `bits + 1` raw bits; otherwise as `q` one bits,
//! a zero bit, then the `k` low bits.

use crate::bitio::{BitReader, BitWriter};
use crate::error::{Error, Result};
use crate::varint::{unzigzag, zigzag};

const CONTEXTS: usize = 21;
const HALVE_AT: u32 = 64;
const ESCAPE: u32 = 24;

/// Median edge detector over left `a`, above `b` and above-left `c`.
pub fn med_predict(a: i64, b: i64, c: i64) -> i64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if c >= hi {
        lo
    } else if c <= lo {
        hi
    } else {
        a + b - c
    }
}

#[derive(Clone, Copy)]
struct Context {
    sum: u64,
    count: u32,
}

impl Context {
    fn k(&self) -> u32 {
        let mean = self.sum / u64::from(self.count);
        (64 - mean.leading_zeros()).saturating_sub(1)
    }

    fn update(&mut self, mapped: u64) {
        self.sum += mapped;
        self.count += 1;
        if self.count == HALVE_AT {
            self.sum >>= 1;
            self.count >>= 1;
        }
    }
}

struct Model {
    contexts: [Context; CONTEXTS],
}

impl Model {
    fn new(bits: u8) -> Self {
        // Seed each context with a mean near 1/64 of the alphabet.
        let seed = ((1u64 << bits) >> 6).max(1);
        Model {
            contexts: [Context {
                sum: seed,
                count: 1,
            }; CONTEXTS],
        }
    }
}

/// Neighbors of sample `i` in a row-major plane, with edge substitution.
#[inline]
fn neighbors(plane: &[u32], width: usize, i: usize) -> (i64, i64, i64) {
    let (x, y) = (i % width, i / width);
    match (x, y) {
        (0, 0) => (0, 0, 0),
        (_, 0) => {
            let a = i64::from(plane[i - 1]);
            (a, a, a)
        }
        (0, _) => {
            let b = i64::from(plane[i - width]);
            (b, b, b)
        }
        _ => (
            i64::from(plane[i - 1]),
            i64::from(plane[i - width]),
            i64::from(plane[i - width - 1]),
        ),
    }
}

#[inline]
fn context_of(a: i64, b: i64, c: i64) -> usize {
    let activity = (a - c).unsigned_abs() + (b - c).unsigned_abs();
    ((64 - activity.leading_zeros()) as usize).min(CONTEXTS - 1)
}

pub(super) fn encode(samples: &[u32], width: usize, bits: u8) -> Vec<u8> {
    let mut model = Model::new(bits);
    let mut w = BitWriter::new();
    for i in 0..samples.len() {
        let (a, b, c) = neighbors(samples, width, i);
        let ctx = &mut model.contexts[context_of(a, b, c)];
        let err = i64::from(samples[i]) - med_predict(a, b, c);
        let mapped = zigzag(err);
        let k = ctx.k();
        let q = mapped >> k;
        if q < u64::from(ESCAPE) {
            for _ in 0..q {
                w.write_bit(true);
            }
            w.write_bit(false);
            w.write((mapped & ((1 << k) - 1)) as u32, k);
        } else {
            w.write((1 << ESCAPE) - 1, ESCAPE);
            w.write(mapped as u32, u32::from(bits) + 1);
        }
        ctx.update(mapped);
    }
    w.finish()
}

pub(super) fn decode(payload: &[u8], count: u64, width: usize, bits: u8) -> Result<Vec<u32>> {
    // Every sample costs at least one bit.
    if (payload.len() as u64).saturating_mul(8) < count {
        return Err(Error::Truncated("med-rice plane"));
    }
    let limit = 1i64 << bits;
    let mut model = Model::new(bits);
    let mut r = BitReader::new(payload);
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..count as usize {
        let (a, b, c) = neighbors(&out, width, i);
        let ctx = &mut model.contexts[context_of(a, b, c)];
        let k = ctx.k();
        let mut q = 0;
        while q < ESCAPE && r.read_bit()? {
            q += 1;
        }
        let mapped = if q == ESCAPE {
            u64::from(r.read(u32::from(bits) + 1)?)
        } else {
            if k > 32 {
                return Err(Error::corrupt(
                    "med-rice plane",
                    "rice parameter out of range",
                ));
            }
            let low = if k == 32 {
                u64::from(r.read(16)?) << 16 | u64::from(r.read(16)?)
            } else {
                u64::from(r.read(k)?)
            };
            (u64::from(q) << k) | low
        };
        let value = med_predict(a, b, c) + unzigzag(mapped);
        if !(0..limit).contains(&value) {
            return Err(Error::corrupt(
                "med-rice plane",
                format!("sample {value} outside {bits}-bit range"),
            ));
        }
        out.push(value as u32);
        ctx.update(mapped);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn med_examples() {
        assert_eq!(med_predict(10, 20, 5), 20);
        assert_eq!(med_predict(10, 10, 10), 10);
        assert_eq!(med_predict(10, 20, 25), 10);
        assert_eq!(med_predict(10, 20, 15), 15);
    }

    #[test]
    fn edge_substitution_matches_rules() {
        let plane = [5, 9, 2, 7];
        // first row predicts from the left
        let (a, b, c) = neighbors(&plane, 2, 1);
        assert_eq!(med_predict(a, b, c), 5);
        // first column predicts from above
        let (a, b, c) = neighbors(&plane, 2, 2);
        assert_eq!(med_predict(a, b, c), 5);
        assert_eq!(neighbors(&plane, 2, 0), (0, 0, 0));
        assert_eq!(neighbors(&plane, 2, 3), (2, 9, 5));
    }

    #[test]
    fn smooth_planes_compress() {
        let (w, h) = (64usize, 64usize);
        let samples: Vec<u32> = (0..w * h)
            .map(|i| ((i % w) * 40 + (i / w / 16) * 25) as u32)
            .collect();
        let bytes = encode(&samples, w, 12);
        assert!(bytes.len() < w * h * 12 / 8 / 4, "{}", bytes.len());
        assert_eq!(decode(&bytes, (w * h) as u64, w, 12).unwrap(), samples);
    }

    #[test]
    fn escapes_roundtrip() {
        let samples = [0u32, 262143, 0, 262143, 1, 131072];
        let bytes = encode(&samples, 3, 18);
        assert_eq!(decode(&bytes, 6, 3, 18).unwrap(), samples);
        for cut in 0..bytes.len() {
            assert!(decode(&bytes[..cut], 6, 3, 18).is_err());
        }
    }
}
