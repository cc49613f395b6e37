//! Shared helpers for integration tests: image generators, the natural
//! corpus, a marker walker and a scalar reference JPEG decoder.

#![allow(dead_code)]

use std::path::PathBuf;

use half::f16;
use histpack::image_io::{self, HdrImage, ImageFormat, PixelType, ReadOptions};
use rand::Rng;

pub mod refjpeg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Half,
    Int12,
    Int16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Content {
    /// Independent uniform samples over the whole code range.
    Noise,
    /// Smooth ramps with mild noise.
    Smooth,
    /// Flat rectangles of random level.
    Blocks,
    /// Few distinct values, so histograms are very sparse.
    Sparse,
    Constant,
}

pub const CONTENTS: [Content; 5] = [
    Content::Noise,
    Content::Smooth,
    Content::Blocks,
    Content::Sparse,
    Content::Constant,
];

fn max_code(kind: Kind) -> u32 {
    match kind {
        Kind::Half => 0xFFFF,
        Kind::Int12 => 0x0FFF,
        Kind::Int16 => 0xFFFF,
    }
}

/// Maps a value in [0, 1] to a code of `kind`. Half floats span roughly
/// 2^-10 to 2^10, so smooth content stays smooth in the float domain.
fn unit_to_code(kind: Kind, t: f64) -> u16 {
    let t = t.clamp(0.0, 1.0);
    match kind {
        Kind::Half => f16::from_f64(2f64.powf(20.0 * t - 10.0)).to_bits(),
        _ => (t * f64::from(max_code(kind))).round() as u16,
    }
}

pub fn random_image(rng: &mut impl Rng, w: u32, h: u32, kind: Kind, content: Content) -> HdrImage {
    let n = (w * h) as usize;
    let planes: [Vec<u16>; 3] = std::array::from_fn(|_| match content {
        Content::Noise => (0..n)
            .map(|_| rng.random_range(0..=max_code(kind)) as u16)
            .collect(),
        Content::Smooth => {
            let (fx, fy, phase) = (
                rng.random_range(0.5..4.0),
                rng.random_range(0.5..4.0),
                rng.random_range(0.0..6.3),
            );
            (0..n)
                .map(|i| {
                    let x = (i as u32 % w) as f64 / f64::from(w);
                    let y = (i as u32 / w) as f64 / f64::from(h);
                    let t = 0.5 + 0.45 * (fx * x * 6.3 + phase).sin() * (fy * y * 4.0).cos();
                    unit_to_code(kind, t + rng.random_range(-0.002..0.002))
                })
                .collect()
        }
        Content::Blocks => {
            let bw = rng.random_range(1..=16);
            let levels: Vec<u16> = (0..64)
                .map(|_| unit_to_code(kind, rng.random_range(0.0..1.0)))
                .collect();
            (0..n)
                .map(|i| {
                    let (x, y) = (i as u32 % w / bw, i as u32 / w / bw);
                    levels[((x * 7 + y * 13) % 64) as usize]
                })
                .collect()
        }
        Content::Sparse => {
            let values: Vec<u16> = (0..rng.random_range(1..6))
                .map(|_| rng.random_range(0..=max_code(kind)) as u16)
                .collect();
            (0..n)
                .map(|_| values[rng.random_range(0..values.len())])
                .collect()
        }
        Content::Constant => vec![rng.random_range(0..=max_code(kind)) as u16; n],
    });
    let (pt, depth) = match kind {
        Kind::Half => (PixelType::HalfFloat, 16),
        Kind::Int12 => (PixelType::Integer, 12),
        Kind::Int16 => (PixelType::Integer, 16),
    };
    HdrImage::new(w, h, planes, pt, depth).unwrap()
}

/// Directory holding the natural 8-bit corpus. `HISTPACK_CORPUS`
/// overrides the bundled set.
pub fn corpus_dir() -> PathBuf {
    std::env::var_os("HISTPACK_CORPUS")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data"))
}

/// Every `.ppm` in the corpus directory, sorted by name.
pub fn corpus() -> Vec<(String, HdrImage)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ppm"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let img = image_io::read_image(&p, ImageFormat::Ppm16, ReadOptions::default()).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), img)
        })
        .collect()
}

fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Lifts an 8-bit photo to scene-referred HDR: linearize, apply a smooth
/// exposure field spanning `stops` stops, and add signal-dependent noise
/// so the result carries more than 8 bits of real information. Returns a
/// half-float image, or linear integer codes of `int_depth` bits.
pub fn lift_to_hdr(ldr: &HdrImage, stops: f64, seed: u64, int_depth: Option<u8>) -> HdrImage {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (ldr.width(), ldr.height());
    let max = f64::from((1u32 << ldr.bit_depth()) - 1);
    let linear: Vec<[f64; 3]> = (0..ldr.pixel_count())
        .map(|i| {
            let (x, y) = (
                (i as u32 % w) as f64 / f64::from(w),
                (i as u32 / w) as f64 / f64::from(h),
            );
            let field = 0.6 * (x - 0.5)
                + 0.4 * ((3.0 * y).sin() - 0.5)
                + 0.5 * (-((x - 0.7).powi(2) + (y - 0.3).powi(2)) * 12.0).exp();
            let gain = 2f64.powf(stops * field);
            std::array::from_fn(|c| {
                let v = srgb_to_linear(f64::from(ldr.plane(c)[i]) / max) * gain;
                let noise: f64 = rng.random_range(-1.0..1.0);
                (v + noise * 0.01 * v.sqrt()).max(0.0)
            })
        })
        .collect();
    let planes: [Vec<u16>; 3] = match int_depth {
        None => std::array::from_fn(|c| {
            linear
                .iter()
                .map(|p| f16::from_f64(p[c]).to_bits())
                .collect()
        }),
        Some(depth) => {
            let peak = linear.iter().flatten().cloned().fold(0.0, f64::max);
            let top = f64::from((1u32 << depth) - 1);
            std::array::from_fn(|c| {
                linear
                    .iter()
                    .map(|p| (p[c] / peak * top).round() as u16)
                    .collect()
            })
        }
    };
    match int_depth {
        None => HdrImage::new(w, h, planes, PixelType::HalfFloat, 16).unwrap(),
        Some(d) => HdrImage::new(w, h, planes, PixelType::Integer, d).unwrap(),
    }
}

/// Walks a complete JPEG file marker by marker, skipping entropy-coded
/// data, and returns the marker codes in order (SOI and EOI included).
/// Independent of the codec's own parser.
pub fn marker_walk(data: &[u8]) -> Result<Vec<u8>, String> {
    if data.len() < 4 || data[0] != 0xFF || data[1] != 0xD8 {
        return Err("no SOI".into());
    }
    let mut out = vec![0xD8];
    let mut i = 2;
    loop {
        if i + 1 >= data.len() {
            return Err(format!("ran off the end at {i}"));
        }
        if data[i] != 0xFF {
            return Err(format!("expected marker at {i}"));
        }
        let m = data[i + 1];
        if m == 0xFF {
            i += 1;
            continue;
        }
        out.push(m);
        if m == 0xD9 {
            if i + 2 != data.len() {
                return Err("bytes after EOI".into());
            }
            return Ok(out);
        }
        if (0xD0..=0xD7).contains(&m) || m == 0xD8 || m == 0x00 || m == 0x01 {
            return Err(format!("marker {m:02X} outside a scan"));
        }
        if i + 3 >= data.len() {
            return Err("truncated length".into());
        }
        let len = usize::from(data[i + 2]) << 8 | usize::from(data[i + 3]);
        if len < 2 || i + 2 + len > data.len() {
            return Err(format!("bad segment length {len} at {i}"));
        }
        i += 2 + len;
        if m == 0xDA {
            // entropy-coded data runs to the next non-RST marker
            loop {
                if i + 1 >= data.len() {
                    return Err("scan never ends".into());
                }
                if data[i] == 0xFF && data[i + 1] != 0x00 && !(0xD0..=0xD7).contains(&data[i + 1]) {
                    break;
                }
                i += 1;
            }
        }
    }
}
