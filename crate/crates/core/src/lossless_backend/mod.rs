//! Pluggable lossless coders for packed index planes.
//!
//! Two reference backends ship here: [`BackendId::Store`], fixed-width bit
//! packing whose size is known analytically, and [`BackendId::MedRice`],
//! median edge prediction with adaptive Golomb-Rice coding. Ids for
//! external image codecs are reserved so they can be slotted in later.

mod med_rice;
mod store;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram_pack::IndexPlane;
use crate::varint::{self, ByteReader};

pub use med_rice::med_predict;
pub use store::store_payload_len;

/// Widest index sample a plane codestream may carry. Chroma residual
/// differences span 18 bits, so packed chroma indices can too.
pub const MAX_BITS_PER_SAMPLE: u8 = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BackendId {
    Store,
    MedRice,
    /// Reserved for an external JPEG 2000 coder.
    Jpeg2000,
    /// Reserved for an external JPEG XR coder.
    JpegXr,
}

impl BackendId {
    pub fn id(self) -> u8 {
        match self {
            BackendId::Store => 0,
            BackendId::MedRice => 1,
            BackendId::Jpeg2000 => 0x10,
            BackendId::JpegXr => 0x11,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(BackendId::Store),
            1 => Ok(BackendId::MedRice),
            0x10 => Ok(BackendId::Jpeg2000),
            0x11 => Ok(BackendId::JpegXr),
            id => Err(Error::Unsupported {
                what: "backend",
                id,
            }),
        }
    }

    pub fn is_supported(self) -> bool {
        matches!(self, BackendId::Store | BackendId::MedRice)
    }
}

/// One coded index plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneCodestream {
    pub backend: BackendId,
    pub width: u32,
    pub height: u32,
    pub bits_per_sample: u8,
    pub payload: Vec<u8>,
}

const WHAT: &str = "plane codestream";

impl PlaneCodestream {
    /// `[u8 backend][varint W][varint H][u8 bits][varint len][payload]`
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload.len() + 16);
        out.push(self.backend.id());
        varint::write_u64(&mut out, u64::from(self.width));
        varint::write_u64(&mut out, u64::from(self.height));
        out.push(self.bits_per_sample);
        varint::write_u64(&mut out, self.payload.len() as u64);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses a codestream that must span `bytes` exactly.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, WHAT);
        let backend = BackendId::from_id(r.u8()?)?;
        let width = r.varint_u32()?;
        let height = r.varint_u32()?;
        let bits_per_sample = r.u8()?;
        let len = r.varint()?;
        let len =
            usize::try_from(len).map_err(|_| Error::corrupt(WHAT, "payload length overflows"))?;
        let payload = r.bytes(len)?.to_vec();
        if !r.is_empty() {
            return Err(Error::corrupt(WHAT, "trailing bytes"));
        }
        Ok(PlaneCodestream {
            backend,
            width,
            height,
            bits_per_sample,
            payload,
        })
    }
}

/// Bits needed to hold every index up to `max_sample`, at least one.
pub fn bits_for(max_sample: u32) -> u8 {
    (32 - max_sample.leading_zeros()).max(1) as u8
}

pub fn encode_plane(idx: &IndexPlane, backend: BackendId) -> Result<PlaneCodestream> {
    let bits = bits_for(idx.max_sample());
    if bits > MAX_BITS_PER_SAMPLE {
        return Err(Error::InvalidArgument(format!(
            "index plane needs {bits} bits per sample, limit is {MAX_BITS_PER_SAMPLE}"
        )));
    }
    let payload = match backend {
        BackendId::Store => store::encode(&idx.samples, bits),
        BackendId::MedRice => med_rice::encode(&idx.samples, idx.width as usize, bits),
        other => {
            return Err(Error::Unsupported {
                what: "backend",
                id: other.id(),
            })
        }
    };
    Ok(PlaneCodestream {
        backend,
        width: idx.width,
        height: idx.height,
        bits_per_sample: bits,
        payload,
    })
}

pub fn decode_plane(cs: &PlaneCodestream) -> Result<IndexPlane> {
    if cs.width == 0 || cs.height == 0 {
        return Err(Error::corrupt(WHAT, "empty plane"));
    }
    if !(1..=MAX_BITS_PER_SAMPLE).contains(&cs.bits_per_sample) {
        return Err(Error::corrupt(
            WHAT,
            format!("bits per sample {}", cs.bits_per_sample),
        ));
    }
    let count = u64::from(cs.width) * u64::from(cs.height);
    let samples = match cs.backend {
        BackendId::Store => store::decode(&cs.payload, count, cs.bits_per_sample)?,
        BackendId::MedRice => {
            med_rice::decode(&cs.payload, count, cs.width as usize, cs.bits_per_sample)?
        }
        other => {
            return Err(Error::Unsupported {
                what: "backend",
                id: other.id(),
            })
        }
    };
    IndexPlane::new(cs.width, cs.height, samples)
}
