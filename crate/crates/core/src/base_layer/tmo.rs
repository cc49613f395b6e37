//! Global monotone tone curves from the 16-bit code domain to 8 bits.
//!
//! Only the 256-entry inverse is stored in the codestream: the decoder
//! maps each decoded base-layer level back to a representative HDR code
//! and adds the residual. Which curve is used affects compression only,
//! never losslessness.

use half::f16;

use crate::error::{Error, Result};
use crate::image_io::{HdrImage, LdrImage, PixelType};

pub const CODE_DOMAIN: usize = 1 << 16;

// Percentiles of the positive finite samples that bound the log stretch.
const LOW_PERCENTILE: f64 = 0.005;
const HIGH_PERCENTILE: f64 = 0.995;
const LARGEST_FINITE_HALF: usize = 0x7BFF;

/// Representative HDR code for each 8-bit level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseCurve([u16; 256]);

impl InverseCurve {
    pub const SERIALIZED_LEN: usize = 512;

    pub fn new(levels: [u16; 256]) -> Self {
        InverseCurve(levels)
    }

    #[inline]
    pub fn get(&self, level: u8) -> u16 {
        self.0[level as usize]
    }

    pub fn levels(&self) -> &[u16; 256] {
        &self.0
    }

    /// 256 little-endian u16 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != Self::SERIALIZED_LEN {
            return Err(Error::corrupt(
                "tone curve",
                format!(
                    "expected {} bytes, got {}",
                    Self::SERIALIZED_LEN,
                    bytes.len()
                ),
            ));
        }
        let mut levels = [0u16; 256];
        for (l, b) in levels.iter_mut().zip(bytes.chunks_exact(2)) {
            *l = u16::from_le_bytes([b[0], b[1]]);
        }
        Ok(InverseCurve(levels))
    }
}

/// Forward lookup over every 16-bit code plus its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToneMapCurve {
    forward: Vec<u8>,
    inverse: InverseCurve,
}

impl ToneMapCurve {
    /// Builds a curve from an arbitrary non-decreasing forward table. The
    /// inverse of each level is the median of `img`'s codes mapping to
    /// it, or the midpoint of the level's preimage when the image has none.
    pub fn from_forward(forward: Vec<u8>, img: &HdrImage) -> Result<Self> {
        Self::with_histogram(forward, &code_histogram(img))
    }

    fn with_histogram(forward: Vec<u8>, hist: &[u64]) -> Result<Self> {
        if forward.len() != CODE_DOMAIN {
            return Err(Error::InvalidArgument(format!(
                "forward curve needs {CODE_DOMAIN} entries, got {}",
                forward.len()
            )));
        }
        if forward.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(
                "forward curve is not monotone".into(),
            ));
        }

        let mut levels: [Option<u16>; 256] = [None; 256];
        let mut start = 0;
        while start < CODE_DOMAIN {
            let level = forward[start];
            let end = start + forward[start..].iter().take_while(|&&l| l == level).count();
            let occupied: u64 = hist[start..end].iter().sum();
            let code = if occupied == 0 {
                start + (end - 1 - start) / 2
            } else {
                // lower weighted median
                let half = occupied.div_ceil(2);
                let mut seen = 0;
                let mut pick = start;
                for (code, &count) in hist[start..end].iter().enumerate() {
                    seen += count;
                    if seen >= half {
                        pick = start + code;
                        break;
                    }
                }
                pick
            };
            levels[level as usize] = Some(code as u16);
            start = end;
        }

        // Levels the curve never produces borrow the nearest lower level's
        // code (or the nearest higher one at the bottom).
        let first = levels
            .iter()
            .flatten()
            .copied()
            .next()
            .expect("domain is nonempty");
        let mut inverse = [0u16; 256];
        let mut last = first;
        for (slot, level) in inverse.iter_mut().zip(levels) {
            if let Some(code) = level {
                last = code;
            }
            *slot = last;
        }
        Ok(ToneMapCurve {
            forward,
            inverse: InverseCurve(inverse),
        })
    }

    #[inline]
    pub fn forward(&self, code: u16) -> u8 {
        self.forward[code as usize]
    }

    pub fn forward_table(&self) -> &[u8] {
        &self.forward
    }

    pub fn inverse(&self) -> &InverseCurve {
        &self.inverse
    }
}

fn code_histogram(img: &HdrImage) -> Vec<u64> {
    let mut hist = vec![0u64; CODE_DOMAIN];
    for &s in img.planes().iter().flatten() {
        hist[s as usize] += 1;
    }
    hist
}

/// Linear map of `[lo, hi]` onto `[0, 255]`, flat outside.
fn linear_forward(lo: usize, hi: usize) -> Vec<u8> {
    debug_assert!(lo < hi);
    let span = (hi - lo) as u64;
    (0..CODE_DOMAIN)
        .map(|c| {
            if c <= lo {
                0
            } else if c >= hi {
                255
            } else {
                ((2 * 255 * (c - lo) as u64 + span) / (2 * span)) as u8
            }
        })
        .collect()
}

fn log_forward(hist: &[u64]) -> Option<Vec<u8>> {
    let positive = &hist[1..=LARGEST_FINITE_HALF];
    let total: u64 = positive.iter().sum();
    if total == 0 {
        return None;
    }
    let rank_code = |rank: u64| {
        let mut seen = 0;
        for (i, &count) in positive.iter().enumerate() {
            seen += count;
            if seen > rank {
                return i + 1;
            }
        }
        LARGEST_FINITE_HALF
    };
    let mut lo = rank_code((total as f64 * LOW_PERCENTILE) as u64);
    let mut hi = rank_code(((total as f64 * HIGH_PERCENTILE) as u64).min(total - 1));
    if lo == hi {
        if hi < LARGEST_FINITE_HALF {
            hi += 1;
        } else {
            lo -= 1;
        }
    }
    let log_value = |c: usize| f16::from_bits(c as u16).to_f64().log2();
    let (log_lo, log_hi) = (log_value(lo), log_value(hi));
    let forward = (0..CODE_DOMAIN)
        .map(|c| {
            if c <= lo {
                0
            } else if c >= hi {
                255
            } else {
                let t = (log_value(c) - log_lo) / (log_hi - log_lo);
                (255.0 * t).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect();
    Some(forward)
}

/// Default curve for an image: constant mid-gray for single-code images,
/// a linear scale for integer images, and a log-luminance percentile
/// stretch over the positive finite codes of half-float images.
pub fn build_tmo(img: &HdrImage) -> ToneMapCurve {
    let hist = code_histogram(img);
    let min = hist
        .iter()
        .position(|&c| c > 0)
        .expect("images are nonempty");
    let max = hist
        .iter()
        .rposition(|&c| c > 0)
        .expect("images are nonempty");
    let forward = if min == max {
        vec![128u8; CODE_DOMAIN]
    } else {
        match img.pixel_type() {
            PixelType::Integer => linear_forward(0, (1usize << img.bit_depth()) - 1),
            PixelType::HalfFloat => log_forward(&hist).unwrap_or_else(|| linear_forward(min, max)),
        }
    };
    ToneMapCurve::with_histogram(forward, &hist).expect("generated curves are monotone")
}

pub fn tone_map(img: &HdrImage, curve: &ToneMapCurve) -> LdrImage {
    let planes = std::array::from_fn(|c| img.plane(c).iter().map(|&s| curve.forward(s)).collect());
    LdrImage::new(img.width(), img.height(), planes).expect("dimensions come from a valid image")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_consistent(curve: &ToneMapCurve) {
        let fwd = curve.forward_table();
        assert!(fwd.windows(2).all(|w| w[0] <= w[1]));
        let mut produced = [false; 256];
        for &l in fwd {
            produced[l as usize] = true;
        }
        for level in 0..=255u8 {
            if produced[level as usize] {
                assert_eq!(curve.forward(curve.inverse().get(level)), level);
            }
        }
    }

    #[test]
    fn constant_image_maps_to_mid_gray() {
        let img = HdrImage::from_gray(3, 2, vec![0x4321; 6], PixelType::HalfFloat, 16).unwrap();
        let curve = build_tmo(&img);
        assert_eq!(curve.forward(0x4321), 128);
        assert!(curve.inverse().levels().iter().all(|&c| c == 0x4321));
        assert_consistent(&curve);
    }

    #[test]
    fn integer_images_scale_linearly() {
        let img = HdrImage::from_gray(2, 1, vec![0, 4095], PixelType::Integer, 12).unwrap();
        let curve = build_tmo(&img);
        for c in [0u32, 1, 8, 9, 100, 2048, 4094, 4095] {
            let expected = (f64::from(c) * 255.0 / 4095.0).round() as u8;
            assert_eq!(curve.forward(c as u16), expected, "code {c}");
        }
        assert_eq!(curve.inverse().get(0), 0);
        assert_eq!(curve.inverse().get(255), 4095);
        assert_consistent(&curve);
    }

    #[test]
    fn half_float_curve_is_monotone_and_invertible() {
        // Exponential ramp over about 16 stops plus zeros and a negative.
        let mut plane: Vec<u16> = (0..4096)
            .map(|i| f16::from_f64(2f64.powf(-8.0 + 16.0 * i as f64 / 4096.0)).to_bits())
            .collect();
        plane[0] = 0;
        plane[1] = 0xBC00;
        let img = HdrImage::from_gray(64, 64, plane, PixelType::HalfFloat, 16).unwrap();
        let curve = build_tmo(&img);
        assert_consistent(&curve);
        let one = curve.forward(0x3C00);
        assert!((100..=160).contains(&one), "1.0 maps to {one}");
        assert_eq!(curve.forward(0), 0);
    }

    #[test]
    fn median_of_occupied_codes() {
        let img = HdrImage::from_gray(4, 1, vec![10, 11, 11, 30], PixelType::Integer, 16).unwrap();
        let mut fwd = vec![0u8; CODE_DOMAIN];
        for (c, f) in fwd.iter_mut().enumerate() {
            *f = if c < 20 {
                0
            } else if c < 1000 {
                1
            } else {
                2
            };
        }
        let curve = ToneMapCurve::from_forward(fwd, &img).unwrap();
        assert_eq!(curve.inverse().get(0), 11);
        assert_eq!(curve.inverse().get(1), 30);
        assert_eq!(curve.inverse().get(2), 1000 + (65535 - 1000) / 2);
        assert_eq!(curve.inverse().get(200), curve.inverse().get(2));
    }

    #[test]
    fn rejects_non_monotone() {
        let img = HdrImage::from_gray(1, 1, vec![0], PixelType::Integer, 8).unwrap();
        let mut fwd = vec![0u8; CODE_DOMAIN];
        fwd[5] = 9;
        assert!(ToneMapCurve::from_forward(fwd, &img).is_err());
        assert!(ToneMapCurve::from_forward(vec![0; 10], &img).is_err());
    }

    #[test]
    fn inverse_serialization() {
        let inv = InverseCurve::new(std::array::from_fn(|i| (i * 257) as u16));
        let bytes = inv.to_bytes();
        assert_eq!(bytes.len(), 512);
        assert_eq!(&bytes[2..4], &[1, 1]);
        assert_eq!(InverseCurve::from_bytes(&bytes).unwrap(), inv);
        assert!(InverseCurve::from_bytes(&bytes[1..]).is_err());
    }
}
