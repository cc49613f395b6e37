//! Wire format: a baseline JPEG whose APP11 segments carry the extension
//! layer.
//!
//! The extension payload is split into chunks, one per APP11 segment,
//! inserted right after APP0. Every segment starts with the chunk tag
//! [`CHUNK_TAG`] and a little-endian sequence number, so foreign APP11
//! data (JPEG XT boxes, for one) is skipped. A CRC-32 trails the
//! reassembled payload. See `docs/FORMAT.md` for the byte layout.

use crate::base_layer::jpeg::markers::{header_segments, APP0, APP11};
use crate::base_layer::{InverseCurve, JpegCodestream};
use crate::error::{Error, Result};
use crate::histogram_pack::TableCompressor;
use crate::image_io::PixelType;
use crate::lossless_backend::{BackendId, PlaneCodestream};
use crate::residual::ColorTransform;
use crate::varint::{self, ByteReader};

pub const CHUNK_TAG: [u8; 4] = *b"HPKX";
pub const MAGIC: [u8; 4] = *b"HPK\x01";
pub const VERSION: u8 = 1;
/// Largest APP11 payload (segment length minus its two length bytes).
pub const MAX_SEGMENT_PAYLOAD: usize = 65533;
/// Extension bytes per chunk after the tag and sequence number.
pub const CHUNK_DATA: usize = MAX_SEGMENT_PAYLOAD - 6;
pub const MAX_CHUNKS: usize = 1 << 16;

const WHAT: &str = "extension layer";

/// Fixed fields of the extension layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtensionHeader {
    pub pixel_type: PixelType,
    pub bit_depth: u8,
    pub width: u32,
    pub height: u32,
    pub quality: u8,
    pub transform: ColorTransform,
    pub backend: BackendId,
    pub table_compressor: TableCompressor,
    /// CRC-32 of the original image, planes in order, samples as u16 LE.
    pub image_crc: u32,
}

/// Everything the extension layer carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    pub header: ExtensionHeader,
    pub curve: InverseCurve,
    /// Encoded unpacking tables, one per residual component.
    pub tables: [Vec<u8>; 3],
    pub planes: [PlaneCodestream; 3],
}

impl Extension {
    /// Serializes the reassembled extension payload, CRC included.
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let parts: Vec<Vec<u8>> = std::iter::once(self.curve.to_bytes())
            .chain(self.tables.iter().cloned())
            .chain(self.planes.iter().map(PlaneCodestream::to_bytes))
            .collect();

        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(h.pixel_type.to_byte());
        out.push(h.bit_depth);
        varint::write_u64(&mut out, u64::from(h.width));
        varint::write_u64(&mut out, u64::from(h.height));
        out.push(h.quality);
        out.push(h.transform.id());
        out.push(h.backend.id());
        out.push(h.table_compressor.id());
        out.extend_from_slice(&h.image_crc.to_le_bytes());
        let mut offset = 0u64;
        for p in &parts {
            varint::write_u64(&mut out, offset);
            varint::write_u64(&mut out, p.len() as u64);
            offset += p.len() as u64;
        }
        for p in &parts {
            out.extend_from_slice(p);
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::parse(bytes, true)
    }

    /// Parses without checking the trailing CRC, for diagnostics only.
    pub fn from_bytes_unchecked(bytes: &[u8]) -> Result<Self> {
        Self::parse(bytes, false)
    }

    fn parse(bytes: &[u8], checked: bool) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Truncated(WHAT));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if checked && crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
            return Err(Error::Checksum(WHAT));
        }
        let mut r = ByteReader::new(body, WHAT);
        if r.bytes(4)? != MAGIC {
            return Err(Error::corrupt(WHAT, "bad magic"));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Unsupported {
                what: "extension version",
                id: version,
            });
        }
        let header = ExtensionHeader {
            pixel_type: PixelType::from_byte(r.u8()?)?,
            bit_depth: r.u8()?,
            width: r.varint_u32()?,
            height: r.varint_u32()?,
            quality: r.u8()?,
            transform: ColorTransform::from_id(r.u8()?)?,
            backend: BackendId::from_id(r.u8()?)?,
            table_compressor: TableCompressor::from_id(r.u8()?)?,
            image_crc: r.u32_le()?,
        };
        if header.width == 0 || header.height == 0 || header.width > 65535 || header.height > 65535
        {
            return Err(Error::corrupt(WHAT, "image dimensions out of range"));
        }
        if header.quality > 100 {
            return Err(Error::corrupt(WHAT, "quality above 100"));
        }

        // Directory: parts must tile the body in order.
        let mut lens = [0usize; 7];
        let mut expected = 0u64;
        for len in &mut lens {
            let offset = r.varint()?;
            let n = r.varint()?;
            if offset != expected {
                return Err(Error::corrupt(WHAT, "directory entries are not contiguous"));
            }
            expected = offset
                .checked_add(n)
                .ok_or_else(|| Error::corrupt(WHAT, "directory overflow"))?;
            *len = usize::try_from(n).map_err(|_| Error::corrupt(WHAT, "part too large"))?;
        }
        if expected != r.remaining().len() as u64 {
            return Err(Error::corrupt(WHAT, "directory does not cover the body"));
        }
        let curve = InverseCurve::from_bytes(r.bytes(lens[0])?)?;
        let mut tables: [Vec<u8>; 3] = Default::default();
        for (t, &len) in tables.iter_mut().zip(&lens[1..4]) {
            *t = r.bytes(len)?.to_vec();
        }
        let mut planes = Vec::with_capacity(3);
        for &len in &lens[4..] {
            let p = PlaneCodestream::from_bytes(r.bytes(len)?)?;
            if p.width != header.width || p.height != header.height {
                return Err(Error::corrupt(WHAT, "plane dimensions differ from header"));
            }
            if p.backend != header.backend {
                return Err(Error::corrupt(WHAT, "plane backend differs from header"));
            }
            planes.push(p);
        }
        let planes: [PlaneCodestream; 3] = planes.try_into().unwrap();
        Ok(Extension {
            header,
            curve,
            tables,
            planes,
        })
    }
}

/// Splits `payload` into APP11 segments (marker included).
fn chunk_segments(payload: &[u8]) -> Result<Vec<u8>> {
    let chunks = payload.len().div_ceil(CHUNK_DATA).max(1);
    if chunks > MAX_CHUNKS {
        return Err(Error::InvalidArgument(format!(
            "extension payload of {} bytes needs more than {MAX_CHUNKS} chunks",
            payload.len()
        )));
    }
    let mut out = Vec::with_capacity(payload.len() + chunks * 10);
    for (seq, data) in payload.chunks(CHUNK_DATA).enumerate() {
        let len = (2 + CHUNK_TAG.len() + 2 + data.len()) as u16;
        out.extend_from_slice(&[0xFF, APP11]);
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&CHUNK_TAG);
        out.extend_from_slice(&(seq as u16).to_le_bytes());
        out.extend_from_slice(data);
    }
    Ok(out)
}

/// Builds a container from a base-layer JPEG and its extension.
pub fn mux(jpeg: &JpegCodestream, ext: &Extension) -> Result<Vec<u8>> {
    let bytes = jpeg.bytes();
    let segments = header_segments(bytes)?;
    let at = match segments.first() {
        Some(s) if s.marker == APP0 => s.end,
        _ => 2,
    };
    let app11 = chunk_segments(&ext.to_bytes())?;
    let mut out = Vec::with_capacity(bytes.len() + app11.len());
    out.extend_from_slice(&bytes[..at]);
    out.extend_from_slice(&app11);
    out.extend_from_slice(&bytes[at..]);
    Ok(out)
}

/// Reassembles the extension payload from our tagged APP11 segments.
pub fn extension_payload(file: &[u8]) -> Result<Vec<u8>> {
    let mut payload = Vec::new();
    let mut next = 0u32;
    for seg in header_segments(file)? {
        if seg.marker != APP11 {
            continue;
        }
        let data = seg.payload(file);
        if data.len() < 6 || data[..4] != CHUNK_TAG {
            continue;
        }
        let seq = u16::from_le_bytes([data[4], data[5]]);
        if u32::from(seq) != next {
            return Err(Error::corrupt(
                WHAT,
                format!("chunk {seq} found where {next} was expected"),
            ));
        }
        next += 1;
        payload.extend_from_slice(&data[6..]);
    }
    if next == 0 {
        return Err(Error::corrupt(WHAT, "no extension chunks present"));
    }
    Ok(payload)
}

/// Splits a container into its base layer and extension.
pub fn demux(file: &[u8]) -> Result<(JpegCodestream, Extension)> {
    let ext = Extension::from_bytes(&extension_payload(file)?)?;
    let jpeg = JpegCodestream::new(strip_extension(file)?, ext.header.quality);
    Ok((jpeg, ext))
}

/// Removes every APP11 segment, leaving a plain JPEG.
pub fn strip_extension(file: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(file.len());
    let mut pos = 0;
    for seg in header_segments(file)? {
        if seg.marker == APP11 {
            out.extend_from_slice(&file[pos..seg.start]);
            pos = seg.end;
        }
    }
    out.extend_from_slice(&file[pos..]);
    Ok(out)
}
