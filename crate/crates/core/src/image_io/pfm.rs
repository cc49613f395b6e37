use half::f16;

use super::{
    half_to_code, header_tokens, parse_dim, pixel_count, HdrImage, PixelType, ReadOptions,
};
use crate::error::{Error, Result};

/// Parses a PFM file, narrowing every sample to binary16 with
/// round-to-nearest-even. Scanlines are stored bottom-to-top.
pub(super) fn decode(bytes: &[u8], opts: ReadOptions) -> Result<HdrImage> {
    let (toks, offset) = header_tokens(bytes, 4)?;
    let channels = match toks[0] {
        "PF" => 3,
        "Pf" => 1,
        m => return Err(Error::ImageFormat(format!("not a PFM file (magic {m:?})"))),
    };
    let width = parse_dim(toks[1])?;
    let height = parse_dim(toks[2])?;
    let scale: f32 = toks[3]
        .parse()
        .ok()
        .filter(|s: &f32| s.is_finite() && *s != 0.0)
        .ok_or_else(|| Error::ImageFormat(format!("bad PFM scale {:?}", toks[3])))?;
    let little_endian = scale < 0.0;
    let magnitude = scale.abs();

    let n = pixel_count(width, height)?;
    let expected = n
        .checked_mul(channels * 4)
        .ok_or_else(|| Error::ImageFormat("PFM size overflows".into()))?;
    let data = &bytes[offset..];
    if data.len() != expected {
        return Err(Error::ImageFormat(format!(
            "PFM sample data is {} bytes, expected {expected}",
            data.len()
        )));
    }

    let w = width as usize;
    let h = height as usize;
    let mut planes = [vec![0u16; n], vec![0u16; n], vec![0u16; n]];
    for (i, chunk) in data.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let mut v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        if v.is_nan() && !opts.allow_nan {
            return Err(Error::ImageFormat("NaN sample in PFM input".into()));
        }
        if magnitude != 1.0 {
            v *= magnitude;
        }
        let code = half_to_code(f16::from_f32(v));
        let pixel = i / channels;
        let c = i % channels;
        let (x, file_row) = (pixel % w, pixel / w);
        let y = h - 1 - file_row;
        let idx = y * w + x;
        if channels == 1 {
            for p in planes.iter_mut() {
                p[idx] = code;
            }
        } else {
            planes[c][idx] = code;
        }
    }
    HdrImage::new(width, height, planes, PixelType::HalfFloat, 16)
}

/// Writes a little-endian color PFM by widening each half code to f32.
pub(super) fn encode(img: &HdrImage) -> Result<Vec<u8>> {
    if img.pixel_type() != PixelType::HalfFloat {
        return Err(Error::InvalidArgument(
            "PFM output requires a half-float image".into(),
        ));
    }
    let w = img.width() as usize;
    let h = img.height() as usize;
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 12);
    for y in (0..h).rev() {
        for x in 0..w {
            for plane in img.planes() {
                let v = f16::from_bits(plane[y * w + x]).to_f32();
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}
