//! Block modulate-and-sum encoder and the uniform quantizer.
//!
//! The hot path walks the mask look-up table and only ever adds pixel
//! values. It is written once, generic over the sample type, so the same
//! code can run on plain `f64` or on tallied samples that count every
//! arithmetic operation applied to them.

use std::ops::{Add, Mul};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{mismatch, Error, Result};
use crate::mask::MaskLut;
use crate::model::{BlockGeometry, BlockIndexMap, Frame, Measurement, QuantSpec};

/// Below this many measurement pixels the encoder stays on one thread.
const PARALLEL_MIN_PIXELS: usize = 1 << 14;

/// Arithmetic performed on pixel values during an instrumented encode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub additions: u64,
    pub multiplications: u64,
}

#[derive(Debug, Default)]
struct OpTally {
    additions: AtomicU64,
    multiplications: AtomicU64,
}

impl OpTally {
    fn snapshot(&self) -> OpCounts {
        OpCounts {
            additions: self.additions.load(Ordering::Relaxed),
            multiplications: self.multiplications.load(Ordering::Relaxed),
        }
    }

    fn reset(&self) {
        self.additions.store(0, Ordering::Relaxed);
        self.multiplications.store(0, Ordering::Relaxed);
    }
}

/// A pixel value that reports each add or multiply to a shared tally.
#[derive(Clone, Copy)]
struct Tallied<'a> {
    value: f64,
    tally: &'a OpTally,
}

impl Add for Tallied<'_> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        self.tally.additions.fetch_add(1, Ordering::Relaxed);
        Self {
            value: self.value + rhs.value,
            tally: self.tally,
        }
    }
}

impl Mul for Tallied<'_> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        self.tally.multiplications.fetch_add(1, Ordering::Relaxed);
        Self {
            value: self.value * rhs.value,
            tally: self.tally,
        }
    }
}

/// Sum, for every measurement pixel, the frame pixels of the blocks listed
/// for it in the LUT, in LUT order.
fn modulate_and_sum<T, F>(lut: &MaskLut, map: &BlockIndexMap, zero: T, sample: F) -> Vec<T>
where
    T: Copy + Add<Output = T> + Send + Sync,
    F: Fn(usize) -> T + Sync,
{
    let block_base = map.block_base();
    let pixel_offset = map.pixel_offset();
    let sum_pixel = |i: usize| {
        let offset = pixel_offset[i];
        lut.blocks(i).iter().fold(zero, |acc, &b| {
            acc + sample(block_base[b as usize] + offset)
        })
    };
    let n = pixel_offset.len();
    if n >= PARALLEL_MIN_PIXELS {
        (0..n).into_par_iter().map(sum_pixel).collect()
    } else {
        (0..n).map(sum_pixel).collect()
    }
}

/// BMVC encoder bound to one geometry and mask.
#[derive(Debug)]
pub struct Encoder {
    lut: MaskLut,
    map: BlockIndexMap,
    tally: Option<OpTally>,
}

impl Encoder {
    pub fn new(lut: MaskLut) -> Self {
        let map = lut.geometry().block_index_map();
        Self {
            lut,
            map,
            tally: None,
        }
    }

    /// Encoder that counts pixel arithmetic; read with [`Encoder::op_counters`].
    pub fn instrumented(lut: MaskLut) -> Self {
        Self {
            tally: Some(OpTally::default()),
            ..Self::new(lut)
        }
    }

    pub fn geometry(&self) -> &BlockGeometry {
        self.lut.geometry()
    }

    pub fn lut(&self) -> &MaskLut {
        &self.lut
    }

    pub fn encode(&self, frame: &Frame) -> Result<Measurement> {
        let geom = *self.geometry();
        frame.check_dims(geom.frame_height(), geom.frame_width())?;
        let x = frame.data();
        let values = match &self.tally {
            None => modulate_and_sum(&self.lut, &self.map, 0.0, |k| x[k]),
            Some(tally) => {
                tally.reset();
                let zero = Tallied { value: 0.0, tally };
                modulate_and_sum(&self.lut, &self.map, zero, |k| Tallied {
                    value: x[k],
                    tally,
                })
                .into_iter()
                .map(|t| t.value)
                .collect()
            }
        };
        Measurement::new(geom.block_height(), geom.block_width(), values)
    }

    /// Counts from the most recent encode. Zero when not instrumented.
    pub fn op_counters(&self) -> OpCounts {
        self.tally
            .as_ref()
            .map(OpTally::snapshot)
            .unwrap_or_default()
    }
}

/// Quantizer scale for a BMVC mask: the largest per-pixel coverage.
pub fn bmvc_quant_spec(bits: u8, lut: &MaskLut) -> Result<QuantSpec> {
    let y_max = lut.max_coverage();
    if y_max == 0 {
        return Err(Error::DegenerateMask);
    }
    QuantSpec::new(bits, y_max as f64)
}

/// `round(y / y_max * (2^bits - 1))`, halves rounded away from zero.
pub fn quantize_values(values: &[f64], spec: &QuantSpec) -> Result<Vec<u16>> {
    let levels = f64::from(spec.max_code());
    values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if !value.is_finite() {
                return Err(Error::NonFinite(index));
            }
            if value > spec.y_max() || value < 0.0 {
                return Err(Error::Scale {
                    index,
                    value,
                    y_max: spec.y_max(),
                });
            }
            Ok((value / spec.y_max() * levels).round() as u16)
        })
        .collect()
}

pub fn dequantize_values(codes: &[u16], spec: &QuantSpec) -> Result<Vec<f64>> {
    let max = spec.max_code();
    let levels = f64::from(max);
    codes
        .iter()
        .enumerate()
        .map(|(index, &code)| {
            if code > max {
                return Err(Error::CodeRange {
                    index,
                    code,
                    bits: spec.bits(),
                });
            }
            Ok(f64::from(code) * spec.y_max() / levels)
        })
        .collect()
}

pub fn quantize(m: &Measurement, spec: &QuantSpec) -> Result<Vec<u16>> {
    quantize_values(m.values(), spec)
}

pub fn dequantize(codes: &[u16], spec: &QuantSpec, geom: &BlockGeometry) -> Result<Measurement> {
    if codes.len() != geom.block_len() {
        return Err(mismatch(geom.block_len(), codes.len()));
    }
    Measurement::new(
        geom.block_height(),
        geom.block_width(),
        dequantize_values(codes, spec)?,
    )
}
