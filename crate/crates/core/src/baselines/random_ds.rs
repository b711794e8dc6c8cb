//! Random down-sampling: keep `round(N / Cr)` pixels chosen by the key
//! stream; decoding is PnP inpainting.

use crate::error::{mismatch, Error, Result};
use crate::model::{DecodeConfig, Frame};
use crate::operator::GapOperator;
use crate::pnp::{pnp_gap, DecodeOutput};
use crate::rng::KeyStream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomDsPattern {
    height: usize,
    width: usize,
    indices: Vec<usize>,
    seed: u64,
}

impl RandomDsPattern {
    /// `count` distinct pixels from a partial Fisher-Yates shuffle of
    /// `0..N`, stored ascending.
    pub fn new(seed: u64, height: usize, width: usize, count: usize) -> Result<Self> {
        let n = height * width;
        if n == 0 {
            return Err(Error::Geometry(format!("empty frame {height}x{width}")));
        }
        if count == 0 || count > n {
            return Err(Error::Geometry(format!(
                "cannot sample {count} of {n} pixels"
            )));
        }
        let mut ks = KeyStream::new(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..count {
            let j = k + ks.below((n - k) as u64) as usize;
            perm.swap(k, j);
        }
        let mut indices = perm[..count].to_vec();
        indices.sort_unstable();
        Ok(Self {
            height,
            width,
            indices,
            seed,
        })
    }

    pub fn for_ratio(seed: u64, height: usize, width: usize, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 1.0) {
            return Err(Error::Geometry(format!(
                "compression ratio {ratio} must be >= 1"
            )));
        }
        let count = ((height * width) as f64 / ratio).round() as usize;
        Self::new(seed, height, width, count)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Frame values at the sampled pixels, in index order.
pub fn random_ds_encode(frame: &Frame, pattern: &RandomDsPattern) -> Result<Vec<f64>> {
    frame.check_dims(pattern.height, pattern.width)?;
    Ok(pattern.indices.iter().map(|&k| frame.data()[k]).collect())
}

pub fn random_ds_decode(
    samples: &[f64],
    pattern: &RandomDsPattern,
    cfg: &DecodeConfig,
) -> Result<DecodeOutput> {
    random_ds_decode_with_reference(samples, pattern, cfg, None)
}

pub fn random_ds_decode_with_reference(
    samples: &[f64],
    pattern: &RandomDsPattern,
    cfg: &DecodeConfig,
    reference: Option<&Frame>,
) -> Result<DecodeOutput> {
    if samples.len() != pattern.len() {
        return Err(mismatch(pattern.len(), samples.len()));
    }
    pnp_gap(pattern, samples, cfg, None, reference)
}

/// Sampling operator `S`; `SSᵀ = I`, so projection just rewrites the
/// sampled pixels.
impl GapOperator for RandomDsPattern {
    fn frame_dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn measurement_len(&self) -> usize {
        self.indices.len()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&k| x[k]).collect()
    }

    fn project(&self, v: &mut [f64], y: &[f64]) {
        for (&k, &value) in self.indices.iter().zip(y) {
            v[k] = value;
        }
    }

    fn backproject(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.height * self.width];
        self.project(&mut x, y);
        x
    }

    fn dynamic_range(&self) -> f64 {
        1.0
    }
}
