//! Histogram sparseness and reversible histogram packing.
//!
//! A plane whose histogram occupies only some of the values between its
//! minimum and maximum is remapped onto the dense index range
//! `0..|X|`, where `X` is the set of occupied values. The packing function
//! assigns the minimum value index 0 and increments once per occupied
//! value, so it is strictly monotone on `X` and inverted by a sorted list
//! of the occupied values (the unpacking table).

mod table;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use table::{decode_table, delta_stream, encode_table, TableCompressor};

/// Occupied values of a plane and their counts. Zero bins are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseHistogram {
    counts: BTreeMap<i32, u64>,
}

impl SparseHistogram {
    pub fn counts(&self) -> &BTreeMap<i32, u64> {
        &self.counts
    }

    pub fn count(&self, value: i32) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    pub fn min_value(&self) -> Option<i32> {
        self.counts.keys().next().copied()
    }

    pub fn max_value(&self) -> Option<i32> {
        self.counts.keys().next_back().copied()
    }

    /// Number of occupied values, `|X|`.
    pub fn occupied(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Builds a histogram from explicit `(value, count)` pairs, dropping
    /// zero counts and merging duplicates.
    pub fn from_counts(pairs: impl IntoIterator<Item = (i32, u64)>) -> Self {
        let mut counts = BTreeMap::new();
        for (v, c) in pairs {
            if c > 0 {
                *counts.entry(v).or_insert(0) += c;
            }
        }
        SparseHistogram { counts }
    }
}

pub fn build_histogram(plane: &[i32]) -> Result<SparseHistogram> {
    if plane.is_empty() {
        return Err(Error::InvalidArgument("histogram of an empty plane".into()));
    }
    let mut sorted = plane.to_vec();
    sorted.sort_unstable();
    let mut counts = BTreeMap::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let run = sorted[i..].iter().take_while(|&&x| x == v).count();
        counts.insert(v, run as u64);
        i += run;
    }
    Ok(SparseHistogram { counts })
}

/// Occupancy `|X|`, range `D(x) = max - min + 1` and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsenessReport {
    pub occupied: u64,
    pub range: u64,
    pub alpha: f64,
}

pub fn sparseness(h: &SparseHistogram) -> Result<SparsenessReport> {
    let (Some(min), Some(max)) = (h.min_value(), h.max_value()) else {
        return Err(Error::InvalidArgument(
            "sparseness of an empty histogram".into(),
        ));
    };
    let occupied = h.occupied() as u64;
    let range = (i64::from(max) - i64::from(min) + 1) as u64;
    Ok(SparsenessReport {
        occupied,
        range,
        alpha: occupied as f64 / range as f64,
    })
}

/// Sorted list of occupied values; entry `i` is the original value that
/// packs to index `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnpackingTable {
    values: Vec<i32>,
}

impl UnpackingTable {
    pub fn new(values: Vec<i32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty unpacking table".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "unpacking table must be strictly increasing".into(),
            ));
        }
        Ok(UnpackingTable { values })
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

// Beyond this many values of range the packing map falls back to binary
// search instead of a direct lookup array.
const DENSE_LOOKUP_LIMIT: u64 = 1 << 22;
const UNOCCUPIED: u32 = u32::MAX;

/// Forward packing map, defined on occupied values only.
#[derive(Debug, Clone)]
pub struct PackingMap {
    min: i32,
    lookup: Lookup,
}

#[derive(Debug, Clone)]
enum Lookup {
    Dense(Vec<u32>),
    Sorted(Vec<i32>),
}

impl PackingMap {
    /// The packed index of `value`, or `None` if it was not occupied.
    pub fn get(&self, value: i32) -> Option<u32> {
        match &self.lookup {
            Lookup::Dense(lut) => {
                let off = i64::from(value) - i64::from(self.min);
                let idx = usize::try_from(off).ok()?;
                lut.get(idx).copied().filter(|&f| f != UNOCCUPIED)
            }
            Lookup::Sorted(values) => values.binary_search(&value).ok().map(|i| i as u32),
        }
    }
}

pub fn build_packing(h: &SparseHistogram) -> Result<(PackingMap, UnpackingTable)> {
    let report = sparseness(h)?;
    let values: Vec<i32> = h.counts.keys().copied().collect();
    let min = values[0];
    let lookup = if report.range <= DENSE_LOOKUP_LIMIT {
        let mut lut = vec![UNOCCUPIED; report.range as usize];
        for (f, &x) in values.iter().enumerate() {
            lut[(i64::from(x) - i64::from(min)) as usize] = f as u32;
        }
        Lookup::Dense(lut)
    } else {
        Lookup::Sorted(values.clone())
    };
    Ok((PackingMap { min, lookup }, UnpackingTable { values }))
}

/// Packed plane whose samples are indices into an [`UnpackingTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPlane {
    pub width: u32,
    pub height: u32,
    pub samples: Vec<u32>,
}

impl IndexPlane {
    pub fn new(width: u32, height: u32, samples: Vec<u32>) -> Result<Self> {
        if samples.len() as u64 != u64::from(width) * u64::from(height) {
            return Err(Error::InvalidArgument(format!(
                "index plane of {width}x{height} needs {} samples, got {}",
                u64::from(width) * u64::from(height),
                samples.len()
            )));
        }
        Ok(IndexPlane {
            width,
            height,
            samples,
        })
    }

    pub fn max_sample(&self) -> u32 {
        self.samples.iter().copied().max().unwrap_or(0)
    }
}

pub fn pack_plane(plane: &[i32], width: u32, height: u32, map: &PackingMap) -> Result<IndexPlane> {
    let samples = plane
        .iter()
        .map(|&x| {
            map.get(x).ok_or_else(|| {
                Error::InvalidArgument(format!("value {x} is not in the packing map"))
            })
        })
        .collect::<Result<Vec<u32>>>()?;
    IndexPlane::new(width, height, samples)
}

pub fn unpack_plane(idx: &IndexPlane, table: &UnpackingTable) -> Result<Vec<i32>> {
    idx.samples
        .iter()
        .map(|&f| {
            table.values.get(f as usize).copied().ok_or_else(|| {
                Error::corrupt(
                    "index plane",
                    format!("index {f} beyond table of {} entries", table.len()),
                )
            })
        })
        .collect()
}
