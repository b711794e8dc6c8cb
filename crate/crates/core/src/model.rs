//! Domain types shared by the encoder, operator and decoders.
//!
//! Frames are row-major `f64` planes with intensity normalized to `[0, 1]`.
//! Blocks tile a frame in row-major block order and pixels inside a block
//! are also numbered row-major, so block `b`, in-block pixel `i` maps to a
//! unique frame pixel.

use serde::{Deserialize, Serialize};

use crate::denoiser::DenoiserKind;
use crate::error::{mismatch, Error, Result};

/// A grayscale plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Geometry(format!("empty frame {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(mismatch(height * width, data.len()));
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

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "empty frame");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "empty frame");
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    /// Frame from 8-bit samples, mapping `n` to `n / 255`.
    pub fn from_u8(height: usize, width: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(
            height,
            width,
            pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
        )
    }

    /// Round to 8-bit samples after clamping to `[0, 1]`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn clipped(&self) -> Frame {
        Frame {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Rectangular sub-frame.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Frame> {
        if height == 0 || width == 0 || top + height > self.height || left + width > self.width {
            return Err(Error::Geometry(format!(
                "crop {height}x{width} at ({top},{left}) outside {}x{} frame",
                self.height, self.width
            )));
        }
        Ok(Frame::from_fn(height, width, |r, c| {
            self.get(top + r, left + c)
        }))
    }

    pub(crate) fn check_dims(&self, height: usize, width: usize) -> Result<()> {
        if self.height != height || self.width != width {
            return Err(mismatch(
                format!("{height}x{width} frame"),
                format!("{}x{} frame", self.height, self.width),
            ));
        }
        Ok(())
    }

    pub(crate) fn from_parts(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
        }
    }
}

/// Frame and block dimensions. Blocks must tile the frame exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockGeometry {
    frame_height: usize,
    frame_width: usize,
    block_height: usize,
    block_width: usize,
}

impl BlockGeometry {
    pub fn new(
        frame_height: usize,
        frame_width: usize,
        block_height: usize,
        block_width: usize,
    ) -> Result<Self> {
        if frame_height == 0 || frame_width == 0 || block_height == 0 || block_width == 0 {
            return Err(Error::Geometry(format!(
                "zero dimension in frame {frame_height}x{frame_width} / block {block_height}x{block_width}"
            )));
        }
        if !frame_height.is_multiple_of(block_height) || !frame_width.is_multiple_of(block_width) {
            return Err(Error::Geometry(format!(
                "block {block_height}x{block_width} does not tile frame {frame_height}x{frame_width}"
            )));
        }
        Ok(Self {
            frame_height,
            frame_width,
            block_height,
            block_width,
        })
    }

    /// Geometry with exactly `block_count` blocks, choosing the most square
    /// block grid that tiles the frame.
    pub fn with_block_count(
        frame_height: usize,
        frame_width: usize,
        block_count: usize,
    ) -> Result<Self> {
        if block_count == 0 {
            return Err(Error::Geometry("block count must be positive".into()));
        }
        let mut best: Option<(usize, usize)> = None;
        for down in 1..=block_count {
            if !block_count.is_multiple_of(down) {
                continue;
            }
            let across = block_count / down;
            if !frame_height.is_multiple_of(down) || !frame_width.is_multiple_of(across) {
                continue;
            }
            let (bh, bw) = (frame_height / down, frame_width / across);
            let skew = bh.max(bw) as f64 / bh.min(bw) as f64;
            let better = match best {
                None => true,
                Some((d, a)) => {
                    let (h, w) = (frame_height / d, frame_width / a);
                    skew < h.max(w) as f64 / h.min(w) as f64
                }
            };
            if better {
                best = Some((down, across));
            }
        }
        let (down, across) = best.ok_or_else(|| {
            Error::Geometry(format!(
                "no block grid with {block_count} blocks tiles a {frame_height}x{frame_width} frame"
            ))
        })?;
        Self::new(
            frame_height,
            frame_width,
            frame_height / down,
            frame_width / across,
        )
    }

    pub fn frame_height(&self) -> usize {
        self.frame_height
    }

    pub fn frame_width(&self) -> usize {
        self.frame_width
    }

    pub fn block_height(&self) -> usize {
        self.block_height
    }

    pub fn block_width(&self) -> usize {
        self.block_width
    }

    pub fn blocks_down(&self) -> usize {
        self.frame_height / self.block_height
    }

    pub fn blocks_across(&self) -> usize {
        self.frame_width / self.block_width
    }

    pub fn block_count(&self) -> usize {
        self.blocks_down() * self.blocks_across()
    }

    /// Pixels per measurement pixel. Equal to the block count.
    pub fn compression_ratio(&self) -> usize {
        self.block_count()
    }

    pub fn block_len(&self) -> usize {
        self.block_height * self.block_width
    }

    pub fn frame_len(&self) -> usize {
        self.frame_height * self.frame_width
    }

    pub fn block_index_map(&self) -> BlockIndexMap {
        let across = self.blocks_across();
        let block_base = (0..self.block_count())
            .map(|b| {
                (b / across) * self.block_height * self.frame_width
                    + (b % across) * self.block_width
            })
            .collect();
        let pixel_offset = (0..self.block_len())
            .map(|i| (i / self.block_width) * self.frame_width + i % self.block_width)
            .collect();
        BlockIndexMap {
            geometry: *self,
            block_base,
            pixel_offset,
        }
    }
}

/// Bijection between (block, in-block pixel) and frame pixel indices.
///
/// `frame_index(b, i) = block_base[b] + pixel_offset[i]`, so walking the
/// map needs only integer additions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockIndexMap {
    geometry: BlockGeometry,
    block_base: Vec<usize>,
    pixel_offset: Vec<usize>,
}

impl BlockIndexMap {
    pub fn geometry(&self) -> &BlockGeometry {
        &self.geometry
    }

    pub fn block_base(&self) -> &[usize] {
        &self.block_base
    }

    pub fn pixel_offset(&self) -> &[usize] {
        &self.pixel_offset
    }

    #[inline]
    pub fn frame_index(&self, block: usize, pixel: usize) -> usize {
        self.block_base[block] + self.pixel_offset[pixel]
    }

    /// Inverse map: frame linear index to `(block, in-block pixel)`.
    pub fn locate(&self, frame_index: usize) -> (usize, usize) {
        let g = &self.geometry;
        let (row, col) = (frame_index / g.frame_width, frame_index % g.frame_width);
        let block = (row / g.block_height) * g.blocks_across() + col / g.block_width;
        let pixel = (row % g.block_height) * g.block_width + col % g.block_width;
        (block, pixel)
    }
}

/// The summed block, row-major over in-block pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    block_height: usize,
    block_width: usize,
    values: Vec<f64>,
}

impl Measurement {
    pub fn new(block_height: usize, block_width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != block_height * block_width {
            return Err(mismatch(block_height * block_width, values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            block_height,
            block_width,
            values,
        })
    }

    pub fn block_height(&self) -> usize {
        self.block_height
    }

    pub fn block_width(&self) -> usize {
        self.block_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn check_block(&self, geom: &BlockGeometry) -> Result<()> {
        if self.block_height != geom.block_height() || self.block_width != geom.block_width() {
            return Err(mismatch(
                format!("{}x{} measurement", geom.block_height(), geom.block_width()),
                format!("{}x{} measurement", self.block_height, self.block_width),
            ));
        }
        Ok(())
    }
}

/// Uniform quantizer: `bits` in `[8, 16]`, codes in `[0, 2^bits - 1]`
/// covering measurement values in `[0, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantSpec {
    bits: u8,
    y_max: f64,
}

impl QuantSpec {
    pub const MIN_BITS: u8 = 8;
    pub const MAX_BITS: u8 = 16;

    pub fn new(bits: u8, y_max: f64) -> Result<Self> {
        if !(Self::MIN_BITS..=Self::MAX_BITS).contains(&bits) {
            return Err(Error::Quantizer(format!(
                "bit depth {bits} outside [8, 16]"
            )));
        }
        if !(y_max.is_finite() && y_max > 0.0) {
            return Err(Error::Quantizer(format!("scale {y_max} must be positive")));
        }
        Ok(Self { bits, y_max })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    /// Largest code, `2^bits - 1`.
    pub fn max_code(&self) -> u16 {
        ((1u32 << self.bits) - 1) as u16
    }
}

/// One level of the decreasing noise schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaStage {
    /// Denoiser strength in 0-255 intensity units.
    pub sigma: f64,
    pub iterations: usize,
}

/// Knobs of the plug-and-play decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub sigma_schedule: Vec<SigmaStage>,
    pub denoiser: DenoiserKind,
}

impl Default for DecodeConfig {
    /// Sixty iterations: sigma 20, 10 and 5, twenty iterations each.
    fn default() -> Self {
        Self {
            sigma_schedule: vec![
                SigmaStage {
                    sigma: 20.0,
                    iterations: 20,
                },
                SigmaStage {
                    sigma: 10.0,
                    iterations: 20,
                },
                SigmaStage {
                    sigma: 5.0,
                    iterations: 20,
                },
            ],
            denoiser: DenoiserKind::Tv,
        }
    }
}

impl DecodeConfig {
    pub fn new(sigma_schedule: Vec<SigmaStage>, denoiser: DenoiserKind) -> Result<Self> {
        let cfg = Self {
            sigma_schedule,
            denoiser,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_denoiser(mut self, denoiser: DenoiserKind) -> Self {
        self.denoiser = denoiser;
        self
    }

    pub fn iterations(&self) -> usize {
        self.sigma_schedule.iter().map(|s| s.iterations).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_schedule.is_empty() {
            return Err(Error::Config("empty sigma schedule".into()));
        }
        for stage in &self.sigma_schedule {
            if !(stage.sigma.is_finite() && stage.sigma > 0.0) {
                return Err(Error::Config(format!(
                    "sigma {} must be positive",
                    stage.sigma
                )));
            }
            if stage.iterations == 0 {
                return Err(Error::Config(format!(
                    "sigma {} has zero iterations",
                    stage.sigma
                )));
            }
        }
        Ok(())
    }

    /// Sigma used at each iteration, in order.
    pub fn sigma_sequence(&self) -> impl Iterator<Item = f64> + '_ {
        self.sigma_schedule
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.sigma, s.iterations))
    }

    /// Parse `"20x20,10x20,5x20"` (sigma x iterations, comma separated).
    pub fn parse_schedule(text: &str) -> Result<Vec<SigmaStage>> {
        text.split(',')
            .map(|part| {
                let (sigma, iterations) = part.trim().split_once(['x', 'X']).ok_or_else(|| {
                    Error::Config(format!("schedule entry '{part}' is not SIGMAxCOUNT"))
                })?;
                let sigma: f64 = sigma
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad sigma in '{part}'")))?;
                let iterations: usize = iterations
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad iteration count in '{part}'")))?;
                Ok(SigmaStage { sigma, iterations })
            })
            .collect()
    }

    /// Default sigma levels spread over `total` iterations, earlier levels
    /// taking the remainder.
    pub fn with_total_iterations(total: usize, denoiser: DenoiserKind) -> Result<Self> {
        let levels: Vec<f64> = Self::default()
            .sigma_schedule
            .iter()
            .map(|s| s.sigma)
            .collect();
        let (base, extra) = (total / levels.len(), total % levels.len());
        let stages = levels
            .iter()
            .enumerate()
            .map(|(k, &sigma)| SigmaStage {
                sigma,
                iterations: base + usize::from(k < extra),
            })
            .filter(|s| s.iterations > 0)
            .collect();
        Self::new(stages, denoiser)
    }
}
