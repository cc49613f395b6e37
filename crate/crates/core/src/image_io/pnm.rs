use super::{header_tokens, parse_dim, pixel_count, HdrImage, PixelType};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Kind {
    Color,
    Gray,
}

impl Kind {
    fn magic(self) -> &'static str {
        match self {
            Kind::Color => "P6",
            Kind::Gray => "P5",
        }
    }

    fn channels(self) -> usize {
        match self {
            Kind::Color => 3,
            Kind::Gray => 1,
        }
    }
}

/// Bit depth implied by a maxval: the number of bits needed to hold it.
fn depth_for_maxval(maxval: u32) -> u8 {
    (32 - maxval.leading_zeros()) as u8
}

pub(super) fn decode(bytes: &[u8], kind: Kind) -> Result<HdrImage> {
    let (toks, offset) = header_tokens(bytes, 4)?;
    if toks[0] != kind.magic() {
        return Err(Error::ImageFormat(format!(
            "expected {} magic, found {:?}",
            kind.magic(),
            toks[0]
        )));
    }
    let width = parse_dim(toks[1])?;
    let height = parse_dim(toks[2])?;
    let maxval: u32 = match toks[3].parse() {
        Ok(v) if (1..=65535).contains(&v) => v,
        _ => return Err(Error::ImageFormat(format!("bad maxval {:?}", toks[3]))),
    };
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let channels = kind.channels();
    let n = pixel_count(width, height)?;
    let expected = n
        .checked_mul(channels * bytes_per_sample)
        .ok_or_else(|| Error::ImageFormat("PNM size overflows".into()))?;
    let data = &bytes[offset..];
    if data.len() != expected {
        return Err(Error::ImageFormat(format!(
            "PNM sample data is {} bytes, expected {expected}",
            data.len()
        )));
    }

    let mut planes = [vec![0u16; n], vec![0u16; n], vec![0u16; n]];
    for (i, chunk) in data.chunks_exact(bytes_per_sample).enumerate() {
        let v = if bytes_per_sample == 2 {
            u16::from_be_bytes([chunk[0], chunk[1]])
        } else {
            u16::from(chunk[0])
        };
        if u32::from(v) > maxval {
            return Err(Error::ImageFormat(format!(
                "sample {v} exceeds maxval {maxval}"
            )));
        }
        if channels == 1 {
            for p in planes.iter_mut() {
                p[i] = v;
            }
        } else {
            planes[i % 3][i / 3] = v;
        }
    }
    HdrImage::new(
        width,
        height,
        planes,
        PixelType::Integer,
        depth_for_maxval(maxval),
    )
}

pub(super) fn encode(img: &HdrImage, kind: Kind) -> Result<Vec<u8>> {
    if img.pixel_type() != PixelType::Integer {
        return Err(Error::InvalidArgument(
            "PPM/PGM output requires an integer image".into(),
        ));
    }
    if kind == Kind::Gray && !img.is_gray() {
        return Err(Error::InvalidArgument(
            "PGM output requires identical color planes".into(),
        ));
    }
    let maxval = (1u32 << img.bit_depth()) - 1;
    let wide = maxval > 255;
    let mut out = format!(
        "{}\n{} {}\n{maxval}\n",
        kind.magic(),
        img.width(),
        img.height()
    )
    .into_bytes();
    let n = img.pixel_count();
    let planes = img.planes();
    let mut push = |v: u16| {
        if wide {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.push(v as u8);
        }
    };
    for i in 0..n {
        match kind {
            Kind::Gray => push(planes[0][i]),
            Kind::Color => {
                for p in planes {
                    push(p[i]);
                }
            }
        }
    }
    Ok(out)
}
