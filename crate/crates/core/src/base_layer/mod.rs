//! Legacy-decodable base layer: global tone mapping to 8 bits and a
//! deterministic baseline JPEG codec.
//!
//! The encoder subtracts exactly what the decoder will reconstruct, so the
//! JPEG decoder here is integer-only and bit-reproducible everywhere.

pub mod jpeg;
mod tmo;

pub use jpeg::{jpeg_decode, jpeg_encode, JpegCodestream};
pub use tmo::{build_tmo, tone_map, InverseCurve, ToneMapCurve, CODE_DOMAIN};
