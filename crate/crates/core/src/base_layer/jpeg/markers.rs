//! Marker codes (second byte after 0xFF) and a segment walker for the
//! header portion of a JPEG file.

use crate::error::{Error, Result};

pub const SOI: u8 = 0xD8;
pub const EOI: u8 = 0xD9;
pub const SOF0: u8 = 0xC0;
pub const DHT: u8 = 0xC4;
pub const DQT: u8 = 0xDB;
pub const DRI: u8 = 0xDD;
pub const SOS: u8 = 0xDA;
pub const APP0: u8 = 0xE0;
pub const APP11: u8 = 0xEB;
pub const COM: u8 = 0xFE;
pub const RST0: u8 = 0xD0;
pub const RST7: u8 = 0xD7;

/// One length-prefixed marker segment located in a byte buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub marker: u8,
    /// Offset of the 0xFF byte.
    pub start: usize,
    /// Offset one past the segment's last payload byte.
    pub end: usize,
}

impl Segment {
    /// Payload bytes after the two length bytes.
    pub fn payload<'a>(&self, data: &'a [u8]) -> &'a [u8] {
        &data[self.start + 4..self.end]
    }
}

/// Walks the segments between SOI and the first SOS (inclusive of the SOS
/// segment itself). Returns the segments in file order.
pub fn header_segments(data: &[u8]) -> Result<Vec<Segment>> {
    if data.len() < 2 || data[0] != 0xFF || data[1] != SOI {
        return Err(Error::corrupt("jpeg", "missing SOI"));
    }
    let mut segments = Vec::new();
    let mut pos = 2;
    loop {
        // Fill bytes (0xFF runs) may precede a marker.
        let mut p = pos;
        while p < data.len() && data[p] == 0xFF {
            p += 1;
        }
        if p == pos || p >= data.len() {
            return Err(if p >= data.len() {
                Error::Truncated("jpeg header")
            } else {
                Error::corrupt("jpeg", format!("expected marker at offset {pos}"))
            });
        }
        let marker = data[p];
        let start = p - 1;
        match marker {
            0x00 | 0x01 | RST0..=RST7 | SOI | EOI => {
                return Err(Error::corrupt(
                    "jpeg",
                    format!("unexpected marker 0x{marker:02X} before SOS"),
                ));
            }
            _ => {}
        }
        if p + 3 > data.len() {
            return Err(Error::Truncated("jpeg segment length"));
        }
        let len = usize::from(u16::from_be_bytes([data[p + 1], data[p + 2]]));
        if len < 2 {
            return Err(Error::corrupt("jpeg", "segment length below 2"));
        }
        let end = p + 1 + len;
        if end > data.len() {
            return Err(Error::Truncated("jpeg segment"));
        }
        segments.push(Segment { marker, start, end });
        if marker == SOS {
            return Ok(segments);
        }
        pos = end;
    }
}
