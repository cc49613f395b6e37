//! Baseline sequential JPEG (8-bit, Huffman, 4:4:4 YCbCr) encoder and
//! decoder. The decoder ignores every APPn and COM segment, which is what
//! lets the extension layer ride along in APP11.

mod color;
pub(crate) mod dct;
mod decoder;
mod encoder;
pub(crate) mod huffman;
pub mod markers;
pub mod tables;

use crate::error::{Error, Result};
use crate::image_io::LdrImage;

/// A complete baseline JPEG file (SOI through EOI) and the quality it was
/// encoded with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JpegCodestream {
    bytes: Vec<u8>,
    quality: u8,
}

impl JpegCodestream {
    pub fn new(bytes: Vec<u8>, quality: u8) -> Self {
        JpegCodestream { bytes, quality }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn quality(&self) -> u8 {
        self.quality
    }

    pub fn decode(&self) -> Result<LdrImage> {
        jpeg_decode(&self.bytes)
    }
}

/// Encodes `ldr` at quality `q` (0..=100). Output is a pure function of
/// the input pixels and `q`.
pub fn jpeg_encode(ldr: &LdrImage, q: u8) -> Result<JpegCodestream> {
    if q > 100 {
        return Err(Error::InvalidArgument(format!(
            "quality {q} outside 0..=100"
        )));
    }
    if ldr.width() > 0xffff || ldr.height() > 0xffff {
        return Err(Error::InvalidArgument(format!(
            "{}x{} exceeds the 65535 pixel JPEG dimension limit",
            ldr.width(),
            ldr.height()
        )));
    }
    Ok(JpegCodestream::new(encoder::encode(ldr, q), q))
}

/// Decodes a baseline JPEG with integer-only arithmetic.
pub fn jpeg_decode(bytes: &[u8]) -> Result<LdrImage> {
    decoder::decode(bytes)
}
