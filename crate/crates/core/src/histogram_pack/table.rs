//! DPCM coding of unpacking tables.
//!
//! Wire layout: `[u8 compressor id][varint zigzag(first)][varint count]`
//! followed, when `count > 1`, by the compressed stream of `count - 1`
//! strictly positive deltas, each an unsigned LEB128 varint. The
//! compressed stream runs to the end of the buffer.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::UnpackingTable;
use crate::error::{Error, Result};
use crate::varint::{self, ByteReader};

/// General-purpose compressor applied to the DPCM delta stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableCompressor {
    /// Raw deflate (RFC 1951), best compression level.
    Deflate,
    /// bzip2 block-sorting compression, 900k blocks.
    Bzip2,
}

impl TableCompressor {
    pub fn id(self) -> u8 {
        match self {
            TableCompressor::Deflate => 0,
            TableCompressor::Bzip2 => 1,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(TableCompressor::Deflate),
            1 => Ok(TableCompressor::Bzip2),
            id => Err(Error::Unsupported {
                what: "table compressor",
                id,
            }),
        }
    }
}

/// First value and the strictly positive successive differences.
pub fn delta_stream(table: &UnpackingTable) -> (i32, Vec<u64>) {
    let v = table.values();
    let deltas = v
        .windows(2)
        .map(|w| (i64::from(w[1]) - i64::from(w[0])) as u64)
        .collect();
    (v[0], deltas)
}

pub fn encode_table(table: &UnpackingTable, compressor: TableCompressor) -> Vec<u8> {
    let (first, deltas) = delta_stream(table);
    let mut out = vec![compressor.id()];
    varint::write_i64(&mut out, i64::from(first));
    varint::write_u64(&mut out, table.len() as u64);
    if deltas.is_empty() {
        return out;
    }
    let mut raw = Vec::with_capacity(deltas.len() * 2);
    for d in deltas {
        varint::write_u64(&mut raw, d);
    }
    // Writes into a Vec cannot fail.
    match compressor {
        TableCompressor::Deflate => {
            let mut enc = flate2::write::DeflateEncoder::new(out, flate2::Compression::best());
            enc.write_all(&raw).expect("in-memory write");
            enc.finish().expect("in-memory write")
        }
        TableCompressor::Bzip2 => {
            let mut enc = bzip2::write::BzEncoder::new(out, bzip2::Compression::best());
            enc.write_all(&raw).expect("in-memory write");
            enc.finish().expect("in-memory write")
        }
    }
}

const WHAT: &str = "unpacking table";
// A delta between two i32 values needs at most five varint bytes.
const MAX_DELTA_BYTES: u64 = 5;

pub fn decode_table(bytes: &[u8]) -> Result<UnpackingTable> {
    let mut r = ByteReader::new(bytes, WHAT);
    let compressor = TableCompressor::from_id(r.u8()?)?;
    let first = r.varint_i64()?;
    let first = i32::try_from(first)
        .map_err(|_| Error::corrupt(WHAT, format!("first value {first} out of range")))?;
    let count = r.varint()?;
    if count == 0 || count > 1 << 32 {
        return Err(Error::corrupt(
            WHAT,
            format!("implausible entry count {count}"),
        ));
    }
    let blob = r.remaining();
    if count == 1 {
        if !blob.is_empty() {
            return Err(Error::corrupt(
                WHAT,
                "trailing bytes after single-entry table",
            ));
        }
        return Ok(UnpackingTable {
            values: vec![first],
        });
    }

    let limit = (count - 1) * MAX_DELTA_BYTES + 1;
    let raw = decompress(compressor, blob, limit)?;
    if raw.len() as u64 >= limit {
        return Err(Error::corrupt(
            WHAT,
            "delta stream longer than its entry count allows",
        ));
    }

    let mut values = Vec::with_capacity((count as usize).min(raw.len() + 1));
    values.push(first);
    let mut current = i64::from(first);
    let mut dr = ByteReader::new(&raw, WHAT);
    for _ in 1..count {
        let delta = dr.varint()?;
        if delta == 0 {
            return Err(Error::corrupt(WHAT, "non-positive delta"));
        }
        current = i64::try_from(delta)
            .ok()
            .and_then(|d| current.checked_add(d))
            .filter(|&v| v <= i64::from(i32::MAX))
            .ok_or_else(|| Error::corrupt(WHAT, "value exceeds 32-bit range"))?;
        values.push(current as i32);
    }
    if !dr.is_empty() {
        return Err(Error::corrupt(WHAT, "trailing bytes in delta stream"));
    }
    Ok(UnpackingTable { values })
}

fn decompress(compressor: TableCompressor, blob: &[u8], limit: u64) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    let leftover = match compressor {
        TableCompressor::Deflate => {
            let mut dec = flate2::bufread::DeflateDecoder::new(blob);
            (&mut dec)
                .take(limit)
                .read_to_end(&mut raw)
                .map_err(|e| Error::corrupt(WHAT, e.to_string()))?;
            dec.into_inner().len()
        }
        TableCompressor::Bzip2 => {
            let mut dec = bzip2::bufread::BzDecoder::new(blob);
            (&mut dec)
                .take(limit)
                .read_to_end(&mut raw)
                .map_err(|e| Error::corrupt(WHAT, e.to_string()))?;
            dec.into_inner().len()
        }
    };
    if (raw.len() as u64) < limit && leftover != 0 {
        return Err(Error::corrupt(
            WHAT,
            "trailing bytes after compressed stream",
        ));
    }
    Ok(raw)
}
