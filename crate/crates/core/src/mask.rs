//! The shared binary mask (the codec key) and its look-up-table form.

use crate::error::{mismatch, Error, Result};
use crate::model::BlockGeometry;
use crate::rng::KeyStream;

/// Full-frame binary modulation pattern, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPlane {
    height: usize,
    width: usize,
    bits: Vec<u8>,
    seed: Option<u64>,
}

/// Draws one fair bit per pixel, row-major, from the seeded key stream.
pub fn generate_mask(seed: u64, height: usize, width: usize) -> Result<MaskPlane> {
    if height == 0 || width == 0 {
        return Err(Error::Geometry(format!("empty mask {height}x{width}")));
    }
    let mut ks = KeyStream::new(seed);
    let bits = (0..height * width)
        .map(|_| u8::from(ks.next_bit()))
        .collect();
    Ok(MaskPlane {
        height,
        width,
        bits,
        seed: Some(seed),
    })
}

impl MaskPlane {
    /// Mask from explicit bits (any nonzero byte counts as 1).
    pub fn from_bits(height: usize, width: usize, bits: &[u8]) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Geometry(format!("empty mask {height}x{width}")));
        }
        if bits.len() != height * width {
            return Err(mismatch(height * width, bits.len()));
        }
        Ok(Self {
            height,
            width,
            bits: bits.iter().map(|&b| u8::from(b != 0)).collect(),
            seed: None,
        })
    }

    pub fn filled(height: usize, width: usize, bit: bool) -> Self {
        Self {
            height,
            width,
            bits: vec![u8::from(bit); height * width],
            seed: None,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| usize::from(b)).sum()
    }

    /// Binary PBM (P4) image of the mask; set bits are written as 1.
    pub fn to_pbm(&self) -> Vec<u8> {
        crate::pnm::encode_pbm(self.height, self.width, &self.bits)
    }
}

/// Per measurement pixel, the ascending list of blocks whose mask bit is
/// set there. Stored compressed: `offsets[i]..offsets[i + 1]` indexes
/// `blocks`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskLut {
    geometry: BlockGeometry,
    offsets: Vec<usize>,
    blocks: Vec<u32>,
}

pub fn build_lut(mask: &MaskPlane, geom: &BlockGeometry) -> Result<MaskLut> {
    if mask.height != geom.frame_height() || mask.width != geom.frame_width() {
        return Err(mismatch(
            format!("{}x{} mask", geom.frame_height(), geom.frame_width()),
            format!("{}x{} mask", mask.height, mask.width),
        ));
    }
    let map = geom.block_index_map();
    let mut offsets = Vec::with_capacity(geom.block_len() + 1);
    let mut blocks = Vec::with_capacity(mask.ones());
    offsets.push(0);
    for i in 0..geom.block_len() {
        for b in 0..geom.block_count() {
            if mask.bits[map.frame_index(b, i)] != 0 {
                blocks.push(b as u32);
            }
        }
        offsets.push(blocks.len());
    }
    let lut = MaskLut {
        geometry: *geom,
        offsets,
        blocks,
    };
    let uncovered = lut.uncovered_pixels();
    if uncovered > 0 {
        log::warn!(
            "mask leaves {uncovered} of {} measurement pixels without any block",
            geom.block_len()
        );
    }
    Ok(lut)
}

impl MaskLut {
    pub fn geometry(&self) -> &BlockGeometry {
        &self.geometry
    }

    /// Blocks contributing to measurement pixel `pixel`, ascending.
    #[inline]
    pub fn blocks(&self, pixel: usize) -> &[u32] {
        &self.blocks[self.offsets[pixel]..self.offsets[pixel + 1]]
    }

    /// `r_i`, the number of blocks summed into measurement pixel `pixel`.
    #[inline]
    pub fn coverage(&self, pixel: usize) -> usize {
        self.offsets[pixel + 1] - self.offsets[pixel]
    }

    pub fn coverages(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn max_coverage(&self) -> usize {
        self.offsets
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
    }

    /// Measurement pixels with `r_i = 0`; they carry no information.
    pub fn uncovered_pixels(&self) -> usize {
        self.offsets.windows(2).filter(|w| w[1] == w[0]).count()
    }

    /// Total number of set mask bits.
    pub fn entries(&self) -> usize {
        self.blocks.len()
    }
}
