use super::{pixel_count, HdrImage, PixelType};
use crate::error::{Error, Result};

/// Sidecar description of a headerless planar file: `channels` planes of
/// `width * height` little-endian u16 samples, one plane after another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawLayout {
    pub width: u32,
    pub height: u32,
    /// 1 (replicated to three planes on read) or 3.
    pub channels: u8,
    pub pixel_type: PixelType,
    pub bit_depth: u8,
}

pub(super) fn decode(bytes: &[u8], layout: &RawLayout) -> Result<HdrImage> {
    let channels = check_channels(layout.channels)?;
    let n = pixel_count(layout.width, layout.height)?;
    let expected = n
        .checked_mul(channels * 2)
        .ok_or_else(|| Error::ImageFormat("raw size overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::ImageFormat(format!(
            "raw file is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let samples: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    let planes = if channels == 1 {
        [samples.clone(), samples.clone(), samples]
    } else {
        [
            samples[..n].to_vec(),
            samples[n..2 * n].to_vec(),
            samples[2 * n..].to_vec(),
        ]
    };
    HdrImage::new(
        layout.width,
        layout.height,
        planes,
        layout.pixel_type,
        layout.bit_depth,
    )
}

pub(super) fn encode(img: &HdrImage, layout: &RawLayout) -> Result<Vec<u8>> {
    let channels = check_channels(layout.channels)?;
    if channels == 1 && !img.is_gray() {
        return Err(Error::InvalidArgument(
            "single-channel raw output requires identical color planes".into(),
        ));
    }
    let mut out = Vec::with_capacity(img.pixel_count() * channels * 2);
    for plane in img.planes().iter().take(channels) {
        for &s in plane {
            out.extend_from_slice(&s.to_le_bytes());
        }
    }
    Ok(out)
}

fn check_channels(channels: u8) -> Result<usize> {
    match channels {
        1 | 3 => Ok(channels as usize),
        c => Err(Error::InvalidArgument(format!(
            "raw images have 1 or 3 channels, not {c}"
        ))),
    }
}
