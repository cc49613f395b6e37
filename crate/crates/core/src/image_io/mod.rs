//! HDR image containers and interchange formats.
//!
//! Pixels are carried as 16-bit integer codes. Half-precision float images
//! store the raw IEEE 754 binary16 bit pattern of each sample, which makes
//! the whole codec an integer pipeline.

mod pfm;
mod pnm;
mod raw;

use std::fs;
use std::path::Path;

use half::f16;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use raw::RawLayout;

/// How the 16-bit sample codes of an [`HdrImage`] are to be interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelType {
    /// Binary16 float bit patterns.
    HalfFloat,
    /// Unsigned integers below `2^bit_depth`.
    Integer,
}

impl PixelType {
    pub fn to_byte(self) -> u8 {
        match self {
            PixelType::HalfFloat => 0,
            PixelType::Integer => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(PixelType::HalfFloat),
            1 => Ok(PixelType::Integer),
            id => Err(Error::Unsupported {
                what: "pixel type",
                id,
            }),
        }
    }
}

/// Reinterprets a half-precision float as its 16-bit code.
#[inline]
pub fn half_to_code(h: f16) -> u16 {
    h.to_bits()
}

/// Inverse of [`half_to_code`]; a bijection over all 65536 codes.
#[inline]
pub fn code_to_half(code: u16) -> f16 {
    f16::from_bits(code)
}

/// Planar three-component HDR raster of 16-bit codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HdrImage {
    width: u32,
    height: u32,
    planes: [Vec<u16>; 3],
    pixel_type: PixelType,
    bit_depth: u8,
}

impl HdrImage {
    pub fn new(
        width: u32,
        height: u32,
        planes: [Vec<u16>; 3],
        pixel_type: PixelType,
        bit_depth: u8,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be nonzero, got {width}x{height}"
            )));
        }
        let n = pixel_count(width, height)?;
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidImage(format!(
                "each plane must hold {n} samples"
            )));
        }
        match pixel_type {
            PixelType::HalfFloat if bit_depth != 16 => {
                return Err(Error::InvalidImage(format!(
                    "half-float images are 16 bits deep, got {bit_depth}"
                )));
            }
            PixelType::Integer => {
                if !(1..=16).contains(&bit_depth) {
                    return Err(Error::InvalidImage(format!(
                        "bit depth {bit_depth} outside 1..=16"
                    )));
                }
                let limit = 1u32 << bit_depth;
                if planes.iter().flatten().any(|&s| u32::from(s) >= limit) {
                    return Err(Error::InvalidImage(format!(
                        "sample exceeds {bit_depth}-bit range"
                    )));
                }
            }
            PixelType::HalfFloat => {}
        }
        Ok(HdrImage {
            width,
            height,
            planes,
            pixel_type,
            bit_depth,
        })
    }

    /// Builds a three-plane image by replicating one grayscale plane.
    pub fn from_gray(
        width: u32,
        height: u32,
        plane: Vec<u16>,
        pixel_type: PixelType,
        bit_depth: u8,
    ) -> Result<Self> {
        let planes = [plane.clone(), plane.clone(), plane];
        Self::new(width, height, planes, pixel_type, bit_depth)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.planes[0].len()
    }

    pub fn planes(&self) -> &[Vec<u16>; 3] {
        &self.planes
    }

    pub fn plane(&self, c: usize) -> &[u16] {
        &self.planes[c]
    }

    pub fn pixel_type(&self) -> PixelType {
        self.pixel_type
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn is_gray(&self) -> bool {
        self.planes[0] == self.planes[1] && self.planes[1] == self.planes[2]
    }

    pub fn into_planes(self) -> [Vec<u16>; 3] {
        self.planes
    }
}

/// Three 8-bit planes; the tone-mapped base layer image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdrImage {
    width: u32,
    height: u32,
    planes: [Vec<u8>; 3],
}

impl LdrImage {
    pub fn new(width: u32, height: u32, planes: [Vec<u8>; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("empty LDR image".into()));
        }
        let n = pixel_count(width, height)?;
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidImage(format!(
                "each LDR plane must hold {n} samples"
            )));
        }
        Ok(LdrImage {
            width,
            height,
            planes,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn planes(&self) -> &[Vec<u8>; 3] {
        &self.planes
    }

    pub fn plane(&self, c: usize) -> &[u8] {
        &self.planes[c]
    }
}

pub(crate) fn pixel_count(width: u32, height: u32) -> Result<usize> {
    (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| Error::InvalidImage(format!("{width}x{height} overflows")))
}

/// Interchange formats understood by [`read_image`] and [`write_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Portable float map, color (`PF`) or gray (`Pf`).
    Pfm,
    /// Binary PPM (`P6`); samples are 16-bit big-endian when maxval > 255.
    Ppm16,
    /// Binary PGM (`P5`).
    Pgm16,
    /// Headerless little-endian 16-bit planes.
    Raw(RawLayout),
}

impl ImageFormat {
    /// Guesses a headered format from a file extension.
    pub fn from_extension(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pfm" => Some(ImageFormat::Pfm),
            "ppm" => Some(ImageFormat::Ppm16),
            "pgm" => Some(ImageFormat::Pgm16),
            _ => None,
        }
    }

    /// Sniffs a headered format from the leading magic bytes.
    pub fn from_magic(bytes: &[u8]) -> Option<Self> {
        match bytes.get(..2)? {
            b"PF" | b"Pf" => Some(ImageFormat::Pfm),
            b"P6" => Some(ImageFormat::Ppm16),
            b"P5" => Some(ImageFormat::Pgm16),
            _ => None,
        }
    }
}

/// Ingestion policy knobs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Accept NaN samples in float inputs instead of rejecting the file.
    pub allow_nan: bool,
}

pub fn read_image(path: &Path, format: ImageFormat, opts: ReadOptions) -> Result<HdrImage> {
    let bytes = fs::read(path)?;
    decode_image(&bytes, format, opts)
}

pub fn decode_image(bytes: &[u8], format: ImageFormat, opts: ReadOptions) -> Result<HdrImage> {
    match format {
        ImageFormat::Pfm => pfm::decode(bytes, opts),
        ImageFormat::Ppm16 => pnm::decode(bytes, pnm::Kind::Color),
        ImageFormat::Pgm16 => pnm::decode(bytes, pnm::Kind::Gray),
        ImageFormat::Raw(layout) => raw::decode(bytes, &layout),
    }
}

pub fn write_image(img: &HdrImage, path: &Path, format: ImageFormat) -> Result<()> {
    let bytes = encode_image(img, format)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_image(img: &HdrImage, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Pfm => pfm::encode(img),
        ImageFormat::Ppm16 => pnm::encode(img, pnm::Kind::Color),
        ImageFormat::Pgm16 => pnm::encode(img, pnm::Kind::Gray),
        ImageFormat::Raw(layout) => raw::encode(img, &layout),
    }
}

/// Splits a PNM/PFM style ASCII header into `count` whitespace-separated
/// tokens, skipping `#` comments, and returns them with the offset of the
/// first data byte (after exactly one whitespace character).
pub(crate) fn header_tokens(bytes: &[u8], count: usize) -> Result<(Vec<&str>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' && bytes[i] != b'\r' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::ImageFormat("header ends early".into()));
        }
        let tok = std::str::from_utf8(&bytes[start..i])
            .map_err(|_| Error::ImageFormat("non-ASCII header".into()))?;
        tokens.push(tok);
    }
    match bytes.get(i) {
        Some(b) if b.is_ascii_whitespace() => Ok((tokens, i + 1)),
        _ => Err(Error::ImageFormat("missing separator after header".into())),
    }
}

pub(crate) fn parse_dim(tok: &str) -> Result<u32> {
    match tok.parse::<u32>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::ImageFormat(format!("bad dimension {tok:?}"))),
    }
}
