//! Block-wise compressive sensing with one dense binary sensing matrix
//! shared by every 24x24 block.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::encoder::OpCounts;
use crate::error::{mismatch, Error, Result};
use crate::model::{DecodeConfig, Frame};
use crate::operator::GapOperator;
use crate::pnp::{pnp_gap, DecodeOutput};
use crate::rng::KeyStream;

pub const BLOCK_CS_SIZE: usize = 24;
pub const BLOCK_CS_LEN: usize = BLOCK_CS_SIZE * BLOCK_CS_SIZE;

/// Seeds tried (`seed`, `seed + 1`, ...) before giving up on a
/// well-conditioned `AAᵀ`.
const MAX_RESEEDS: u64 = 64;

/// Smallest accepted Cholesky pivot relative to the largest.
const PIVOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BlockCsOperator {
    height: usize,
    width: usize,
    measurements: usize,
    requested_seed: u64,
    seed: u64,
    /// Row-major `M x 576` binary matrix.
    matrix: DMatrix<f64>,
    /// Column indices of the ones in each row.
    row_support: Vec<Vec<u16>>,
    gram: DMatrix<f64>,
    gram_factor: Cholesky<f64, Dyn>,
}

fn draw_matrix(seed: u64, rows: usize) -> DMatrix<f64> {
    let mut ks = KeyStream::new(seed);
    let bits: Vec<f64> = (0..rows * BLOCK_CS_LEN)
        .map(|_| if ks.next_bit() { 1.0 } else { 0.0 })
        .collect();
    DMatrix::from_row_slice(rows, BLOCK_CS_LEN, &bits)
}

fn factor_gram(gram: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(gram.clone())?;
    let diag = chol.l_dirty().diagonal();
    let max = diag.max();
    (diag.min() > PIVOT_TOLERANCE * max).then_some(chol)
}

impl BlockCsOperator {
    /// Draws the sensing matrix from `seed`, moving to the next seed when
    /// `AAᵀ` is numerically singular. The seed actually used is reported by
    /// [`BlockCsOperator::seed`].
    pub fn new(seed: u64, height: usize, width: usize, measurements: usize) -> Result<Self> {
        if height == 0 || width == 0 || !height.is_multiple_of(BLOCK_CS_SIZE) || !width.is_multiple_of(BLOCK_CS_SIZE) {
            return Err(Error::Geometry(format!(
                "block CS needs frame dimensions divisible by {BLOCK_CS_SIZE}, got {height}x{width}"
            )));
        }
        if measurements == 0 || measurements > BLOCK_CS_LEN {
            return Err(Error::Geometry(format!(
                "block CS takes 1..={BLOCK_CS_LEN} measurements per block, got {measurements}"
            )));
        }
        for attempt in 0..MAX_RESEEDS {
            let s = seed.wrapping_add(attempt);
            let matrix = draw_matrix(s, measurements);
            let gram = &matrix * matrix.transpose();
            if let Some(gram_factor) = factor_gram(&gram) {
                if attempt > 0 {
                    log::info!("block CS sensing matrix resampled: seed {seed} -> {s}");
                }
                let row_support = (0..measurements)
                    .map(|k| {
                        (0..BLOCK_CS_LEN)
                            .filter(|&j| matrix[(k, j)] != 0.0)
                            .map(|j| j as u16)
                            .collect()
                    })
                    .collect();
                return Ok(Self {
                    height,
                    width,
                    measurements,
                    requested_seed: seed,
                    seed: s,
                    matrix,
                    row_support,
                    gram,
                    gram_factor,
                });
            }
        }
        Err(Error::SingularSensing(seed))
    }

    /// `M = round(576 / Cr)`, at least one.
    pub fn for_ratio(seed: u64, height: usize, width: usize, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 1.0) {
            return Err(Error::Geometry(format!(
                "compression ratio {ratio} must be >= 1"
            )));
        }
        let m = ((BLOCK_CS_LEN as f64 / ratio).round() as usize).max(1);
        Self::new(seed, height, width, m)
    }

    pub fn measurements_per_block(&self) -> usize {
        self.measurements
    }

    pub fn block_count(&self) -> usize {
        (self.height / BLOCK_CS_SIZE) * (self.width / BLOCK_CS_SIZE)
    }

    /// Achieved compression ratio `N / (M · blocks)`.
    pub fn compression_ratio(&self) -> f64 {
        BLOCK_CS_LEN as f64 / self.measurements as f64
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn requested_seed(&self) -> u64 {
        self.requested_seed
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn max_row_sum(&self) -> usize {
        self.row_support.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn blocks_across(&self) -> usize {
        self.width / BLOCK_CS_SIZE
    }

    fn gather_block(&self, x: &[f64], block: usize) -> DVector<f64> {
        let (br, bc) = (block / self.blocks_across(), block % self.blocks_across());
        DVector::from_fn(BLOCK_CS_LEN, |j, _| {
            let r = br * BLOCK_CS_SIZE + j / BLOCK_CS_SIZE;
            let c = bc * BLOCK_CS_SIZE + j % BLOCK_CS_SIZE;
            x[r * self.width + c]
        })
    }

    fn scatter_add(&self, x: &mut [f64], block: usize, values: &DVector<f64>) {
        let (br, bc) = (block / self.blocks_across(), block % self.blocks_across());
        for (j, v) in values.iter().enumerate() {
            let r = br * BLOCK_CS_SIZE + j / BLOCK_CS_SIZE;
            let c = bc * BLOCK_CS_SIZE + j % BLOCK_CS_SIZE;
            x[r * self.width + c] += v;
        }
    }

    /// `(AAᵀ)⁻¹ r` with one step of iterative refinement against the
    /// exact integer Gram matrix.
    fn solve_gram(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut z = self.gram_factor.solve(rhs);
        let correction = self.gram_factor.solve(&(rhs - &self.gram * &z));
        z += correction;
        z
    }

    fn block_corrections(&self, y: &[f64], x: Option<&[f64]>) -> Vec<DVector<f64>> {
        let m = self.measurements;
        (0..self.block_count())
            .into_par_iter()
            .map(|b| {
                let mut rhs = DVector::from_column_slice(&y[b * m..(b + 1) * m]);
                if let Some(x) = x {
                    rhs -= &self.matrix * self.gather_block(x, b);
                }
                self.matrix.tr_mul(&self.solve_gram(&rhs))
            })
            .collect()
    }

    /// Measurements and the pixel additions spent computing them.
    pub fn encode_with_counts(&self, frame: &Frame) -> Result<(Vec<f64>, OpCounts)> {
        frame.check_dims(self.height, self.width)?;
        let x = frame.data();
        let mut out = Vec::with_capacity(self.measurement_len());
        let mut additions = 0u64;
        for b in 0..self.block_count() {
            let (br, bc) = (b / self.blocks_across(), b % self.blocks_across());
            let origin = br * BLOCK_CS_SIZE * self.width + bc * BLOCK_CS_SIZE;
            for support in &self.row_support {
                let mut acc = 0.0;
                for &j in support {
                    let j = usize::from(j);
                    acc += x[origin + (j / BLOCK_CS_SIZE) * self.width + j % BLOCK_CS_SIZE];
                }
                additions += support.len() as u64;
                out.push(acc);
            }
        }
        Ok((
            out,
            OpCounts {
                additions,
                multiplications: 0,
            },
        ))
    }
}

/// Per-block measurements `A x_blk`, blocks in row-major order.
pub fn block_cs_encode(frame: &Frame, op: &BlockCsOperator) -> Result<Vec<f64>> {
    op.encode_with_counts(frame).map(|(y, _)| y)
}

pub fn block_cs_decode(
    measurements: &[f64],
    op: &BlockCsOperator,
    cfg: &DecodeConfig,
) -> Result<DecodeOutput> {
    block_cs_decode_with_reference(measurements, op, cfg, None)
}

pub fn block_cs_decode_with_reference(
    measurements: &[f64],
    op: &BlockCsOperator,
    cfg: &DecodeConfig,
    reference: Option<&Frame>,
) -> Result<DecodeOutput> {
    if measurements.len() != op.measurement_len() {
        return Err(mismatch(op.measurement_len(), measurements.len()));
    }
    pnp_gap(op, measurements, cfg, None, reference)
}

impl GapOperator for BlockCsOperator {
    fn frame_dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn measurement_len(&self) -> usize {
        self.block_count() * self.measurements
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.block_count())
            .flat_map(|b| {
                (&self.matrix * self.gather_block(x, b))
                    .data
                    .as_vec()
                    .clone()
            })
            .collect()
    }

    fn project(&self, v: &mut [f64], y: &[f64]) {
        let corrections = self.block_corrections(y, Some(v));
        for (b, corr) in corrections.iter().enumerate() {
            self.scatter_add(v, b, corr);
        }
    }

    fn backproject(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.height * self.width];
        for (b, corr) in self.block_corrections(y, None).iter().enumerate() {
            self.scatter_add(&mut x, b, corr);
        }
        x
    }

    fn dynamic_range(&self) -> f64 {
        self.max_row_sum() as f64
    }
}
