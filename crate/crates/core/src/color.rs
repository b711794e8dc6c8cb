//! RGB handling: BT.601 full-range YUV, luma coded by BMVC, chroma
//! decimated by box averaging and restored with bicubic interpolation.

use crate::error::{mismatch, Error, Result};
use crate::model::Frame;

const KR: f64 = 0.299;
const KB: f64 = 0.114;
const KG: f64 = 1.0 - KR - KB;

/// Keys cubic convolution parameter.
const CUBIC_A: f64 = -0.5;

pub const DEFAULT_CHROMA_FACTOR: usize = 4;

/// Interleaved RGB, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbFrame {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RgbFrame {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 3 {
            return Err(mismatch("3 channels", format!("{channels} channels")));
        }
        if height == 0 || width == 0 {
            return Err(Error::Geometry(format!("empty frame {height}x{width}")));
        }
        if data.len() != 3 * height * width {
            return Err(mismatch(3 * height * width, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YuvPlanes {
    pub y: Frame,
    /// Blue-difference chroma, offset so neutral is 0.5.
    pub u: Frame,
    /// Red-difference chroma, offset so neutral is 0.5.
    pub v: Frame,
}

pub fn rgb_to_yuv(rgb: &RgbFrame) -> YuvPlanes {
    let n = rgb.height * rgb.width;
    let (mut y, mut u, mut v) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for px in rgb.data.chunks_exact(3) {
        let (r, g, b) = (px[0], px[1], px[2]);
        let luma = KR * r + KG * g + KB * b;
        y.push(luma);
        u.push(0.5 * (b - luma) / (1.0 - KB) + 0.5);
        v.push(0.5 * (r - luma) / (1.0 - KR) + 0.5);
    }
    let (h, w) = (rgb.height, rgb.width);
    YuvPlanes {
        y: Frame::from_parts(h, w, y),
        u: Frame::from_parts(h, w, u),
        v: Frame::from_parts(h, w, v),
    }
}

pub fn yuv_to_rgb(planes: &YuvPlanes) -> Result<RgbFrame> {
    let dims = planes.y.dims();
    if planes.u.dims() != dims || planes.v.dims() != dims {
        return Err(mismatch(
            format!("{}x{} chroma", dims.0, dims.1),
            format!("{:?} / {:?} chroma", planes.u.dims(), planes.v.dims()),
        ));
    }
    let mut data = Vec::with_capacity(3 * planes.y.len());
    for ((&luma, &cb), &cr) in planes
        .y
        .data()
        .iter()
        .zip(planes.u.data())
        .zip(planes.v.data())
    {
        let r = luma + 2.0 * (1.0 - KR) * (cr - 0.5);
        let b = luma + 2.0 * (1.0 - KB) * (cb - 0.5);
        let g = (luma - KR * r - KB * b) / KG;
        data.extend_from_slice(&[r, g, b]);
    }
    RgbFrame::new(dims.0, dims.1, 3, data)
}

fn check_factor(plane: &Frame, factor: usize, divisible: bool) -> Result<()> {
    if factor == 0 {
        return Err(Error::Geometry("chroma factor must be positive".into()));
    }
    if divisible && (!plane.height().is_multiple_of(factor) || !plane.width().is_multiple_of(factor)) {
        return Err(Error::Geometry(format!(
            "chroma factor {factor} does not divide {}x{}",
            plane.height(),
            plane.width()
        )));
    }
    Ok(())
}

/// Box-average decimation by `factor` in both directions.
pub fn chroma_down(plane: &Frame, factor: usize) -> Result<Frame> {
    check_factor(plane, factor, true)?;
    let (h, w) = (plane.height() / factor, plane.width() / factor);
    let area = (factor * factor) as f64;
    Ok(Frame::from_fn(h, w, |r, c| {
        let mut acc = 0.0;
        for dr in 0..factor {
            for dc in 0..factor {
                acc += plane.get(r * factor + dr, c * factor + dc);
            }
        }
        acc / area
    }))
}

fn cubic_weight(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        ((CUBIC_A + 2.0) * t - (CUBIC_A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((CUBIC_A * t - 5.0 * CUBIC_A) * t + 8.0 * CUBIC_A) * t - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Interpolation taps along one axis: for each output sample, four source
/// indices (edge-clamped) and weights. Low-res sample `k` sits at
/// full-res coordinate `(k + 0.5) · factor - 0.5`.
fn cubic_taps(len_low: usize, factor: usize) -> Vec<([usize; 4], [f64; 4])> {
    (0..len_low * factor)
        .map(|x| {
            let s = (x as f64 + 0.5) / factor as f64 - 0.5;
            let base = s.floor();
            let mut idx = [0; 4];
            let mut wts = [0.0; 4];
            for k in 0..4 {
                let pos = base + k as f64 - 1.0;
                idx[k] = (pos.max(0.0) as usize).min(len_low - 1);
                wts[k] = cubic_weight(s - pos);
            }
            (idx, wts)
        })
        .collect()
}

/// Bicubic upsampling by `factor` in both directions.
pub fn chroma_up(plane: &Frame, factor: usize) -> Result<Frame> {
    check_factor(plane, factor, false)?;
    if factor == 1 {
        return Ok(plane.clone());
    }
    let (h, w) = plane.dims();
    let cols = cubic_taps(w, factor);
    let rows = cubic_taps(h, factor);
    let wide: Vec<f64> = (0..h)
        .flat_map(|r| {
            cols.iter()
                .map(move |(idx, wts)| (0..4).map(|k| wts[k] * plane.get(r, idx[k])).sum::<f64>())
        })
        .collect();
    let ow = w * factor;
    Ok(Frame::from_fn(h * factor, ow, |r, c| {
        let (idx, wts) = &rows[r];
        (0..4).map(|k| wts[k] * wide[idx[k] * ow + c]).sum()
    }))
}
