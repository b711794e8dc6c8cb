//! Dense-matrix reference constructions for small instances.

use crate::mask::MaskPlane;
use crate::model::{BlockGeometry, Frame};

/// Explicit sensing matrix `[Diag(m_1), ..., Diag(m_Nb)]`, acting on the
/// concatenation of row-major blocks.
pub fn dense_phi(mask: &MaskPlane, geom: &BlockGeometry) -> Vec<Vec<f64>> {
    let (n, nb) = (geom.block_len(), geom.block_count());
    let across = geom.blocks_across();
    let mut phi = vec![vec![0.0; n * nb]; n];
    for (i, row) in phi.iter_mut().enumerate() {
        for b in 0..nb {
            let r = (b / across) * geom.block_height() + i / geom.block_width();
            let c = (b % across) * geom.block_width() + i % geom.block_width();
            row[b * n + i] = f64::from(mask.bits()[r * geom.frame_width() + c]);
        }
    }
    phi
}

pub fn stack_blocks(frame: &Frame, geom: &BlockGeometry) -> Vec<f64> {
    let across = geom.blocks_across();
    let mut out = Vec::with_capacity(frame.len());
    for b in 0..geom.block_count() {
        for i in 0..geom.block_len() {
            let r = (b / across) * geom.block_height() + i / geom.block_width();
            let c = (b % across) * geom.block_width() + i % geom.block_width();
            out.push(frame.get(r, c));
        }
    }
    out
}

pub fn unstack_blocks(stacked: &[f64], geom: &BlockGeometry) -> Frame {
    let across = geom.blocks_across();
    let mut frame = Frame::zeros(geom.frame_height(), geom.frame_width());
    for b in 0..geom.block_count() {
        for i in 0..geom.block_len() {
            let r = (b / across) * geom.block_height() + i / geom.block_width();
            let c = (b % across) * geom.block_width() + i % geom.block_width();
            frame.data_mut()[r * geom.frame_width() + c] = stacked[b * geom.block_len() + i];
        }
    }
    frame
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| m.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let bt = transpose(b);
    a.iter()
        .map(|row| {
            bt.iter()
                .map(|col| row.iter().zip(col).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect()
}
