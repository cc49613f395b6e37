//! Extension-layer residual: original codes minus the inverse-mapped
//! decoded base layer, with an optional reversible luma/chroma transform.

use serde::{Deserialize, Serialize};

use crate::base_layer::InverseCurve;
use crate::error::{Error, Result};
use crate::image_io::{HdrImage, LdrImage, PixelType};

/// Largest residual magnitude before the color transform: a 16-bit code
/// minus a 16-bit code fits in 17 signed bits.
pub const MAX_RESIDUAL: i32 = 65535;

/// Color transform applied to the residual planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorTransform {
    Identity,
    /// `Y = floor((R + 2G + B) / 4)`, `Cb = B - G`, `Cr = R - G`.
    ReversibleYCbCr,
}

impl ColorTransform {
    pub fn id(self) -> u8 {
        match self {
            ColorTransform::Identity => 0,
            ColorTransform::ReversibleYCbCr => 1,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(ColorTransform::Identity),
            1 => Ok(ColorTransform::ReversibleYCbCr),
            id => Err(Error::Unsupported {
                what: "color transform",
                id,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualPlanes {
    pub width: u32,
    pub height: u32,
    pub planes: [Vec<i32>; 3],
    /// Transform currently applied to `planes`.
    pub transform: ColorTransform,
}

fn check_dims(hw: (u32, u32), bw: (u32, u32)) -> Result<()> {
    if hw != bw {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            hw.0, hw.1, bw.0, bw.1
        )));
    }
    Ok(())
}

pub fn compute_residual(
    hdr: &HdrImage,
    base: &LdrImage,
    curve: &InverseCurve,
) -> Result<ResidualPlanes> {
    check_dims((hdr.width(), hdr.height()), (base.width(), base.height()))?;
    let planes = std::array::from_fn(|c| {
        hdr.plane(c)
            .iter()
            .zip(base.plane(c))
            .map(|(&x, &l)| {
                let r = i32::from(x) - i32::from(curve.get(l));
                assert!(r.abs() <= MAX_RESIDUAL);
                r
            })
            .collect()
    });
    Ok(ResidualPlanes {
        width: hdr.width(),
        height: hdr.height(),
        planes,
        transform: ColorTransform::Identity,
    })
}

/// Adds the residual back onto the inverse-mapped base. Fails if any
/// result leaves the image's code range, which only corrupt input causes.
pub fn reconstruct_hdr(
    res: &ResidualPlanes,
    base: &LdrImage,
    curve: &InverseCurve,
    pixel_type: PixelType,
    bit_depth: u8,
) -> Result<HdrImage> {
    check_dims((res.width, res.height), (base.width(), base.height()))?;
    if res.transform != ColorTransform::Identity {
        return Err(Error::InvalidArgument(
            "residual must be in RGB before reconstruction".into(),
        ));
    }
    let mut planes: [Vec<u16>; 3] = Default::default();
    for (c, out) in planes.iter_mut().enumerate() {
        if res.planes[c].len() != base.plane(c).len() {
            return Err(Error::InvalidArgument(
                "residual plane size mismatch".into(),
            ));
        }
        *out = res.planes[c]
            .iter()
            .zip(base.plane(c))
            .map(|(&r, &l)| {
                let v = i64::from(r) + i64::from(curve.get(l));
                u16::try_from(v).map_err(|_| {
                    Error::corrupt("residual", format!("reconstructed code {v} out of range"))
                })
            })
            .collect::<Result<Vec<u16>>>()?;
    }
    HdrImage::new(res.width, res.height, planes, pixel_type, bit_depth)
        .map_err(|e| Error::corrupt("residual", e.to_string()))
}

pub fn color_forward(res: &ResidualPlanes) -> Result<ResidualPlanes> {
    if res.transform != ColorTransform::Identity {
        return Err(Error::InvalidArgument(
            "color transform already applied".into(),
        ));
    }
    let [r, g, b] = &res.planes;
    let n = r.len();
    let (mut y, mut cb, mut cr) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for i in 0..n {
        y.push((r[i] + 2 * g[i] + b[i]) >> 2);
        cb.push(b[i] - g[i]);
        cr.push(r[i] - g[i]);
    }
    Ok(ResidualPlanes {
        width: res.width,
        height: res.height,
        planes: [y, cb, cr],
        transform: ColorTransform::ReversibleYCbCr,
    })
}

pub fn color_inverse(res: &ResidualPlanes) -> Result<ResidualPlanes> {
    if res.transform != ColorTransform::ReversibleYCbCr {
        return Err(Error::InvalidArgument(
            "no color transform to invert".into(),
        ));
    }
    let [y, cb, cr] = &res.planes;
    let n = y.len();
    if cb.len() != n || cr.len() != n {
        return Err(Error::InvalidArgument(
            "residual plane size mismatch".into(),
        ));
    }
    let (mut r, mut g, mut b) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for i in 0..n {
        // Corrupt planes may hold arbitrary values; wrap rather than panic
        // and let range checks downstream reject the result.
        let gi = y[i].wrapping_sub(cb[i].wrapping_add(cr[i]) >> 2);
        g.push(gi);
        r.push(cr[i].wrapping_add(gi));
        b.push(cb[i].wrapping_add(gi));
    }
    Ok(ResidualPlanes {
        width: res.width,
        height: res.height,
        planes: [r, g, b],
        transform: ColorTransform::Identity,
    })
}

/// Applies `transform` to RGB residual planes.
pub fn apply_transform(res: ResidualPlanes, transform: ColorTransform) -> Result<ResidualPlanes> {
    match transform {
        ColorTransform::Identity => Ok(res),
        ColorTransform::ReversibleYCbCr => color_forward(&res),
    }
}

/// Returns residual planes to RGB, whatever transform they carry.
pub fn undo_transform(res: ResidualPlanes) -> Result<ResidualPlanes> {
    match res.transform {
        ColorTransform::Identity => Ok(res),
        ColorTransform::ReversibleYCbCr => color_inverse(&res),
    }
}
