//! The linear forward model in operator form.
//!
//! `Φ` is a row of diagonal matrices, one per block, so `R = ΦΦᵀ` is
//! diagonal with entries `r_i` (the mask coverage of measurement pixel i).
//! Every operation here is a single pass over the LUT; no matrix is ever
//! materialized.

use crate::error::{mismatch, Error, Result};
use crate::mask::MaskLut;
use crate::model::{BlockGeometry, BlockIndexMap, Frame, Measurement};

/// A sensing operator that supports the GAP projection
/// `x = v + Φᵀ (ΦΦᵀ)⁺ (y - Φv)` on flat row-major frames.
pub trait GapOperator: Sync {
    /// `(height, width)` of the reconstructed frame.
    fn frame_dims(&self) -> (usize, usize);

    fn measurement_len(&self) -> usize;

    fn forward(&self, x: &[f64]) -> Vec<f64>;

    /// Project `v` in place onto `{x : Φx = y}` (restricted to the range
    /// of `Φ` where `ΦΦᵀ` is singular).
    fn project(&self, v: &mut [f64], y: &[f64]);

    /// Minimum-norm consistent estimate `Φᵀ (ΦΦᵀ)⁺ y`.
    fn backproject(&self, y: &[f64]) -> Vec<f64>;

    /// Largest attainable measurement value for inputs in `[0, 1]`.
    fn dynamic_range(&self) -> f64;
}

#[derive(Debug, Clone)]
pub struct BmvcOperator {
    lut: MaskLut,
    map: BlockIndexMap,
    inv_coverage: Vec<f64>,
}

impl BmvcOperator {
    pub fn new(lut: MaskLut) -> Self {
        let map = lut.geometry().block_index_map();
        let inv_coverage = lut
            .coverages()
            .into_iter()
            .map(|r| if r == 0 { 0.0 } else { 1.0 / r as f64 })
            .collect();
        Self {
            lut,
            map,
            inv_coverage,
        }
    }

    pub fn geometry(&self) -> &BlockGeometry {
        self.lut.geometry()
    }

    pub fn lut(&self) -> &MaskLut {
        &self.lut
    }

    /// Diagonal of `ΦΦᵀ`.
    pub fn coverage(&self) -> Vec<usize> {
        self.lut.coverages()
    }

    pub fn apply(&self, x: &Frame) -> Result<Measurement> {
        let g = self.geometry();
        x.check_dims(g.frame_height(), g.frame_width())?;
        Measurement::new(g.block_height(), g.block_width(), self.forward(x.data()))
    }

    pub fn apply_adjoint(&self, y: &Measurement) -> Result<Frame> {
        let g = *self.geometry();
        y.check_block(&g)?;
        let mut x = vec![0.0; g.frame_len()];
        for (i, &yi) in y.values().iter().enumerate() {
            for &b in self.lut.blocks(i) {
                x[self.map.frame_index(b as usize, i)] = yi;
            }
        }
        Ok(Frame::from_parts(g.frame_height(), g.frame_width(), x))
    }

    pub fn gap_project(&self, v: &Frame, y: &Measurement) -> Result<Frame> {
        let g = *self.geometry();
        v.check_dims(g.frame_height(), g.frame_width())?;
        y.check_block(&g)?;
        let mut x = v.clone();
        self.project(x.data_mut(), y.values());
        Ok(x)
    }

    /// `Φᵀ R⁺ y` as a frame.
    pub fn initial_estimate(&self, y: &Measurement) -> Result<Frame> {
        let g = *self.geometry();
        y.check_block(&g)?;
        Ok(Frame::from_parts(
            g.frame_height(),
            g.frame_width(),
            self.backproject(y.values()),
        ))
    }

    pub(crate) fn check_measurement_len(&self, len: usize) -> Result<()> {
        if len != self.measurement_len() {
            return Err(mismatch(self.measurement_len(), len));
        }
        if self.lut.max_coverage() == 0 {
            return Err(Error::DegenerateMask);
        }
        Ok(())
    }
}

impl GapOperator for BmvcOperator {
    fn frame_dims(&self) -> (usize, usize) {
        let g = self.geometry();
        (g.frame_height(), g.frame_width())
    }

    fn measurement_len(&self) -> usize {
        self.geometry().block_len()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.measurement_len())
            .map(|i| {
                self.lut
                    .blocks(i)
                    .iter()
                    .map(|&b| x[self.map.frame_index(b as usize, i)])
                    .sum()
            })
            .collect()
    }

    fn project(&self, v: &mut [f64], y: &[f64]) {
        for (i, &yi) in y.iter().enumerate() {
            let blocks = self.lut.blocks(i);
            let predicted: f64 = blocks
                .iter()
                .map(|&b| v[self.map.frame_index(b as usize, i)])
                .sum();
            let correction = (yi - predicted) * self.inv_coverage[i];
            for &b in blocks {
                v[self.map.frame_index(b as usize, i)] += correction;
            }
        }
    }

    fn backproject(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.geometry().frame_len()];
        for (i, &yi) in y.iter().enumerate() {
            let value = yi * self.inv_coverage[i];
            for &b in self.lut.blocks(i) {
                x[self.map.frame_index(b as usize, i)] = value;
            }
        }
        x
    }

    fn dynamic_range(&self) -> f64 {
        self.lut.max_coverage() as f64
    }
}
