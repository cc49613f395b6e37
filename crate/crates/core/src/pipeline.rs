//! End-to-end encode, decode, verification and measurement.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::base_layer::{build_tmo, jpeg_encode, tone_map};
use crate::container::{self, Extension, ExtensionHeader};
use crate::error::{Error, Result};
use crate::histogram_pack::{
    build_histogram, build_packing, decode_table, encode_table, pack_plane, sparseness,
    unpack_plane, SparsenessReport, TableCompressor,
};
use crate::image_io::{HdrImage, PixelType};
use crate::lossless_backend::{decode_plane, encode_plane, BackendId, PlaneCodestream};
use crate::residual::{
    apply_transform, compute_residual, reconstruct_hdr, undo_transform, ColorTransform,
    ResidualPlanes,
};

pub const DEFAULT_QUALITY: u8 = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeParams {
    pub quality: u8,
    pub backend: BackendId,
    pub transform: ColorTransform,
    pub table_compressor: TableCompressor,
    /// Decode the finished container and compare against the input.
    pub verify: bool,
}

impl Default for EncodeParams {
    fn default() -> Self {
        EncodeParams {
            quality: DEFAULT_QUALITY,
            backend: BackendId::MedRice,
            transform: ColorTransform::ReversibleYCbCr,
            table_compressor: TableCompressor::Deflate,
            verify: true,
        }
    }
}

impl EncodeParams {
    pub fn validate(&self) -> Result<()> {
        if self.quality > 100 {
            return Err(Error::InvalidArgument(format!(
                "quality {} is outside 0..=100",
                self.quality
            )));
        }
        if !self.backend.is_supported() {
            return Err(Error::Unsupported {
                what: "backend",
                id: self.backend.id(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentStats {
    /// Residual sparseness as fed to packing.
    pub before: SparsenessReport,
    /// Sparseness of the packed index plane.
    pub after: SparsenessReport,
    pub bits_per_sample: u8,
    pub table_bytes: usize,
    pub plane_bytes: usize,
}

/// Size breakdown of one container. Byte counts partition
/// `total_bytes`; `overhead_bytes` is segment framing, header, curve and
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub width: u32,
    pub height: u32,
    pub quality: u8,
    pub backend: BackendId,
    pub transform: ColorTransform,
    pub components: Vec<ComponentStats>,
    pub base_bytes: usize,
    pub plane_bytes: usize,
    pub table_bytes: usize,
    pub overhead_bytes: usize,
    pub total_bytes: usize,
}

impl StatsReport {
    fn bpp(&self, bytes: usize) -> f64 {
        bytes as f64 * 8.0 / (f64::from(self.width) * f64::from(self.height))
    }

    pub fn base_bpp(&self) -> f64 {
        self.bpp(self.base_bytes)
    }

    pub fn extension_bpp(&self) -> f64 {
        self.bpp(self.plane_bytes)
    }

    pub fn table_bpp(&self) -> f64 {
        self.bpp(self.table_bytes)
    }

    pub fn overhead_bpp(&self) -> f64 {
        self.bpp(self.overhead_bytes)
    }

    pub fn total_bpp(&self) -> f64 {
        self.bpp(self.total_bytes)
    }

    /// Unpacking tables as a percentage of the whole container.
    pub fn table_overhead_pct(&self) -> f64 {
        100.0 * self.table_bytes as f64 / self.total_bytes as f64
    }
}

struct PackedComponent {
    stats: ComponentStats,
    table: Vec<u8>,
    plane: PlaneCodestream,
}

fn pack_component(
    plane: &[i32],
    width: u32,
    height: u32,
    params: &EncodeParams,
) -> Result<PackedComponent> {
    let hist = build_histogram(plane)?;
    let before = sparseness(&hist)?;
    let (map, table) = build_packing(&hist)?;
    let idx = pack_plane(plane, width, height, &map)?;
    let idx_values: Vec<i32> = idx.samples.iter().map(|&s| s as i32).collect();
    let after = sparseness(&build_histogram(&idx_values)?)?;
    let table = encode_table(&table, params.table_compressor);
    let plane = encode_plane(&idx, params.backend)?;
    Ok(PackedComponent {
        stats: ComponentStats {
            before,
            after,
            bits_per_sample: plane.bits_per_sample,
            table_bytes: table.len(),
            plane_bytes: plane.to_bytes().len(),
        },
        table,
        plane,
    })
}

/// CRC-32 of an image's samples, planes in order, each sample u16 LE.
pub fn image_crc(img: &HdrImage) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for plane in img.planes() {
        for &s in plane {
            h.update(&s.to_le_bytes());
        }
    }
    h.finalize()
}

/// Encodes `img` into a container.
pub fn encode(img: &HdrImage, params: &EncodeParams) -> Result<(Vec<u8>, StatsReport)> {
    params.validate()?;
    let curve = build_tmo(img);
    let jpeg = jpeg_encode(&tone_map(img, &curve), params.quality)?;
    // The residual is taken against what a decoder will actually see.
    let base = jpeg.decode()?;
    let res = compute_residual(img, &base, curve.inverse())?;
    let res = apply_transform(res, params.transform)?;

    let (w, h) = (img.width(), img.height());
    let packed = res
        .planes
        .par_iter()
        .map(|p| pack_component(p, w, h, params))
        .collect::<Result<Vec<_>>>()?;

    let mut components = Vec::with_capacity(3);
    let mut tables: [Vec<u8>; 3] = Default::default();
    let mut planes = Vec::with_capacity(3);
    for (c, p) in packed.into_iter().enumerate() {
        components.push(p.stats);
        tables[c] = p.table;
        planes.push(p.plane);
    }
    let ext = Extension {
        header: ExtensionHeader {
            pixel_type: img.pixel_type(),
            bit_depth: img.bit_depth(),
            width: w,
            height: h,
            quality: params.quality,
            transform: params.transform,
            backend: params.backend,
            table_compressor: params.table_compressor,
            image_crc: image_crc(img),
        },
        curve: curve.inverse().clone(),
        tables,
        planes: planes.try_into().expect("three components"),
    };
    let file = container::mux(&jpeg, &ext)?;

    if params.verify {
        let decoded = decode(&file)?;
        if let Some(diff) = first_difference(img, &decoded) {
            return Err(Error::Mismatch(diff.to_string()));
        }
    }

    let base_bytes = jpeg.bytes().len();
    let plane_bytes = components.iter().map(|c| c.plane_bytes).sum();
    let table_bytes = components.iter().map(|c| c.table_bytes).sum();
    let stats = StatsReport {
        width: w,
        height: h,
        quality: params.quality,
        backend: params.backend,
        transform: params.transform,
        components,
        base_bytes,
        plane_bytes,
        table_bytes,
        overhead_bytes: file.len() - base_bytes - plane_bytes - table_bytes,
        total_bytes: file.len(),
    };
    Ok((file, stats))
}

/// Decodes a container back to the exact original image.
pub fn decode(file: &[u8]) -> Result<HdrImage> {
    decode_with(file, true)
}

fn decode_with(file: &[u8], checked: bool) -> Result<HdrImage> {
    let payload = container::extension_payload(file)?;
    let ext = if checked {
        Extension::from_bytes(&payload)?
    } else {
        Extension::from_bytes_unchecked(&payload)?
    };
    let hdr = ext.header;
    let jpeg = container::strip_extension(file)?;
    let base = crate::base_layer::jpeg_decode(&jpeg)?;
    if (base.width(), base.height()) != (hdr.width, hdr.height) {
        return Err(Error::corrupt(
            "container",
            "base layer dimensions differ from extension header",
        ));
    }

    let planes = ext
        .tables
        .par_iter()
        .zip(ext.planes.par_iter())
        .map(|(t, p)| {
            if t.first() != Some(&hdr.table_compressor.id()) {
                return Err(Error::corrupt(
                    "unpacking table",
                    "compressor differs from extension header",
                ));
            }
            let table = decode_table(t)?;
            unpack_plane(&decode_plane(p)?, &table)
        })
        .collect::<Result<Vec<_>>>()?;
    let res = ResidualPlanes {
        width: hdr.width,
        height: hdr.height,
        planes: planes.try_into().expect("three components"),
        transform: hdr.transform,
    };
    let img = reconstruct_hdr(
        &undo_transform(res)?,
        &base,
        &ext.curve,
        hdr.pixel_type,
        hdr.bit_depth,
    )?;
    if checked && image_crc(&img) != hdr.image_crc {
        return Err(Error::Checksum("reconstructed image"));
    }
    Ok(img)
}

/// Where two images first disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Difference {
    Shape {
        expected: (u32, u32, PixelType, u8),
        actual: (u32, u32, PixelType, u8),
    },
    Sample {
        component: usize,
        x: u32,
        y: u32,
        expected: u16,
        actual: u16,
    },
}

impl fmt::Display for Difference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Difference::Shape {
                expected: e,
                actual: a,
            } => write!(
                f,
                "expected {}x{} {:?}/{} but got {}x{} {:?}/{}",
                e.0, e.1, e.2, e.3, a.0, a.1, a.2, a.3
            ),
            Difference::Sample {
                component,
                x,
                y,
                expected,
                actual,
            } => write!(
                f,
                "component {component} at ({x}, {y}): expected 0x{expected:04X}, got 0x{actual:04X}"
            ),
        }
    }
}

pub fn first_difference(expected: &HdrImage, actual: &HdrImage) -> Option<Difference> {
    let shape = |i: &HdrImage| (i.width(), i.height(), i.pixel_type(), i.bit_depth());
    if shape(expected) != shape(actual) {
        return Some(Difference::Shape {
            expected: shape(expected),
            actual: shape(actual),
        });
    }
    let w = expected.width() as usize;
    for c in 0..3 {
        let (e, a) = (expected.plane(c), actual.plane(c));
        if let Some(i) = (0..e.len()).find(|&i| e[i] != a[i]) {
            return Some(Difference::Sample {
                component: c,
                x: (i % w) as u32,
                y: (i / w) as u32,
                expected: e[i],
                actual: a[i],
            });
        }
    }
    None
}

/// Checks that `file` decodes to `original`. A container whose checksums
/// fail is decoded once more without them so the report can name the
/// first differing sample.
pub fn verify(original: &HdrImage, file: &[u8]) -> Result<()> {
    match decode(file) {
        Ok(img) => match first_difference(original, &img) {
            Some(d) => Err(Error::Mismatch(d.to_string())),
            None => Ok(()),
        },
        Err(e @ Error::Checksum(_)) => match decode_with(file, false) {
            Ok(img) => Err(Error::Mismatch(match first_difference(original, &img) {
                Some(d) => format!("{e}; first difference: {d}"),
                None => format!("{e}; samples match the original"),
            })),
            Err(_) => Err(e),
        },
        Err(e) => Err(e),
    }
}

/// One point of a quality sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub quality: u8,
    pub backend: BackendId,
    pub base_bpp: f64,
    pub extension_bpp: f64,
    pub table_bpp: f64,
    pub overhead_bpp: f64,
    pub total_bpp: f64,
    pub table_overhead_pct: f64,
    pub verified: bool,
}

/// Default sweep grid: 0 to 100 in steps of 10.
pub fn default_qualities() -> Vec<u8> {
    (0..=100).step_by(10).collect()
}

/// Encodes `img` at every quality and backend, verifying each point.
/// Points run in parallel; rows come back ordered by backend, then quality.
pub fn sweep(
    img: &HdrImage,
    qualities: &[u8],
    backends: &[BackendId],
    params: &EncodeParams,
) -> Result<Vec<SweepRow>> {
    let points: Vec<(BackendId, u8)> = backends
        .iter()
        .flat_map(|&b| qualities.iter().map(move |&q| (b, q)))
        .collect();
    points
        .par_iter()
        .map(|&(backend, quality)| {
            let p = EncodeParams {
                quality,
                backend,
                verify: true,
                ..*params
            };
            let (_, s) = encode(img, &p)?;
            Ok(SweepRow {
                quality,
                backend,
                base_bpp: s.base_bpp(),
                extension_bpp: s.extension_bpp(),
                table_bpp: s.table_bpp(),
                overhead_bpp: s.overhead_bpp(),
                total_bpp: s.total_bpp(),
                table_overhead_pct: s.table_overhead_pct(),
                verified: true,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use half::f16;

    fn gradient(w: u32, h: u32) -> HdrImage {
        let planes = std::array::from_fn(|c| {
            (0..w * h)
                .map(|i| ((i % w) * 997 + (i / w) * 131 + c as u32 * 7000) as u16 & 0x0FFF)
                .collect()
        });
        HdrImage::new(w, h, planes, PixelType::Integer, 12).unwrap()
    }

    fn half_image(w: u32, h: u32) -> HdrImage {
        let planes = std::array::from_fn(|c| {
            (0..w * h)
                .map(|i| {
                    let v =
                        0.01 * (1.0 + (i % w) as f32) * (1.0 + (i / w) as f32) * (c as f32 + 1.0);
                    f16::from_f32(v).to_bits()
                })
                .collect()
        });
        HdrImage::new(w, h, planes, PixelType::HalfFloat, 16).unwrap()
    }

    #[test]
    fn roundtrips() {
        for img in [gradient(19, 11), half_image(16, 9), gradient(1, 1)] {
            for backend in [BackendId::Store, BackendId::MedRice] {
                for transform in [ColorTransform::Identity, ColorTransform::ReversibleYCbCr] {
                    let params = EncodeParams {
                        quality: 50,
                        backend,
                        transform,
                        ..Default::default()
                    };
                    let (file, _) = encode(&img, &params).unwrap();
                    assert_eq!(decode(&file).unwrap(), img);
                }
            }
        }
    }

    #[test]
    fn constant_image_is_nearly_free() {
        let img = HdrImage::new(
            16,
            16,
            std::array::from_fn(|_| vec![1234; 256]),
            PixelType::Integer,
            16,
        )
        .unwrap();
        let params = EncodeParams {
            backend: BackendId::Store,
            ..Default::default()
        };
        let (file, stats) = encode(&img, &params).unwrap();
        for c in &stats.components {
            assert_eq!(c.before.occupied, 1);
            assert_eq!(c.bits_per_sample, 1);
        }
        assert_eq!(decode(&file).unwrap(), img);
    }

    #[test]
    fn stats_partition_the_file() {
        let (file, s) = encode(&gradient(40, 30), &EncodeParams::default()).unwrap();
        assert_eq!(s.total_bytes, file.len());
        assert_eq!(
            s.base_bytes + s.plane_bytes + s.table_bytes + s.overhead_bytes,
            s.total_bytes
        );
        let sum = s.base_bpp() + s.extension_bpp() + s.table_bpp() + s.overhead_bpp();
        assert!((sum - s.total_bpp()).abs() < 1e-9);
        assert!((0.0..=100.0).contains(&s.table_overhead_pct()));
        for c in &s.components {
            assert_eq!(c.after.alpha, 1.0);
        }
    }

    #[test]
    fn verify_reports_location() {
        let img = gradient(12, 12);
        let (file, _) = encode(&img, &EncodeParams::default()).unwrap();
        verify(&img, &file).unwrap();

        let mut other = img.clone().into_planes();
        other[2][12 * 3 + 5] ^= 1;
        let other = HdrImage::new(12, 12, other, PixelType::Integer, 12).unwrap();
        let err = verify(&other, &file).unwrap_err().to_string();
        assert!(err.contains("component 2 at (5, 3)"), "{err}");
    }

    #[test]
    fn rejects_bad_params() {
        let img = gradient(4, 4);
        let bad = EncodeParams {
            quality: 101,
            ..Default::default()
        };
        assert!(matches!(encode(&img, &bad), Err(Error::InvalidArgument(_))));
        let bad = EncodeParams {
            backend: BackendId::Jpeg2000,
            ..Default::default()
        };
        assert!(matches!(encode(&img, &bad), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn sweep_rows_are_ordered() {
        let rows = sweep(
            &gradient(16, 16),
            &[0, 50, 100],
            &[BackendId::Store, BackendId::MedRice],
            &EncodeParams::default(),
        )
        .unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.backend, r.quality)).collect();
        assert_eq!(
            keys,
            [
                (BackendId::Store, 0),
                (BackendId::Store, 50),
                (BackendId::Store, 100),
                (BackendId::MedRice, 0),
                (BackendId::MedRice, 50),
                (BackendId::MedRice, 100)
            ]
        );
        assert!(rows.iter().all(|r| r.verified));
    }
}
