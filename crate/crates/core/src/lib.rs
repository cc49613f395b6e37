//! Two-layer lossless HDR image codec.
//!
//! An HDR image is tone mapped to 8 bits and stored as an ordinary
//! baseline JPEG. The difference between the original and the inverse
//! tone-mapped base is histogram packed, coded losslessly and carried in
//! APP11 segments, so legacy decoders see a normal JPEG while this crate
//! recovers the exact original samples.

pub mod base_layer;
pub mod bitio;
pub mod container;
pub mod error;
pub mod histogram_pack;
pub mod image_io;
pub mod lossless_backend;
pub mod pipeline;
pub mod residual;
pub mod varint;

pub use error::{Error, ErrorClass, Result};
pub use pipeline::{decode, encode, verify, EncodeParams, StatsReport};
