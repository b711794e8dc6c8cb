//! Reference implementations shared by the integration tests. None of
//! this calls into the library's solvers; it only borrows plain types.

#![allow(dead_code)]

use std::path::PathBuf;

use bmvc::{pnm, BlockGeometry, Frame};

/// `Φ = [Diag(m_1) … Diag(m_Nb)]` as a dense `n x (n·Nb)` matrix acting on
/// the row-major concatenation of row-major blocks.
pub fn dense_phi(mask: &[u8], geom: &BlockGeometry) -> Vec<Vec<f64>> {
    let (n, nb) = (geom.block_len(), geom.block_count());
    let blocks = stack_blocks(mask.iter().map(|&b| f64::from(b)).collect(), geom);
    let mut phi = vec![vec![0.0; n * nb]; n];
    for (i, row) in phi.iter_mut().enumerate() {
        for b in 0..nb {
            row[b * n + i] = blocks[b * n + i];
        }
    }
    phi
}

/// Reorder a row-major frame into `[x_1; x_2; …]`, block by block.
pub fn stack_blocks(pixels: Vec<f64>, geom: &BlockGeometry) -> Vec<f64> {
    let (bh, bw, fw) = (geom.block_height(), geom.block_width(), geom.frame_width());
    let mut out = Vec::with_capacity(pixels.len());
    for br in 0..geom.blocks_down() {
        for bc in 0..geom.blocks_across() {
            for r in 0..bh {
                for c in 0..bw {
                    out.push(pixels[(br * bh + r) * fw + bc * bw + c]);
                }
            }
        }
    }
    out
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `Φ Φᵀ`.
pub fn gram(phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    phi.iter()
        .map(|a| {
            phi.iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect()
}

/// Anisotropic TV with the last difference in each direction taken as zero.
pub fn tv(u: &[f64], h: usize, w: usize) -> f64 {
    let mut s = 0.0;
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                s += (u[r * w + c + 1] - u[r * w + c]).abs();
            }
            if r + 1 < h {
                s += (u[(r + 1) * w + c] - u[r * w + c]).abs();
            }
        }
    }
    s
}

pub fn tv_objective(u: &[f64], f: &[f64], h: usize, w: usize, lambda: f64) -> f64 {
    0.5 * u.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + lambda * tv(u, h, w)
}

/// Primal solver for `½‖u - f‖² + λ TV(u)`: accelerated gradient descent
/// on a Huber-smoothed TV, tightening the smoothing in stages.
pub fn tv_reference(f: &[f64], h: usize, w: usize, lambda: f64) -> Vec<f64> {
    let mut u = f.to_vec();
    let mut grad = vec![0.0; u.len()];
    for eps in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        let lipschitz = 1.0 + 8.0 * lambda / eps;
        let momentum = (lipschitz.sqrt() - 1.0) / (lipschitz.sqrt() + 1.0);
        let mut prev = u.clone();
        for _ in 0..6000 {
            let z: Vec<f64> = u
                .iter()
                .zip(&prev)
                .map(|(a, b)| a + momentum * (a - b))
                .collect();
            for (g, (zi, fi)) in grad.iter_mut().zip(z.iter().zip(f)) {
                *g = zi - fi;
            }
            let huber = |d: f64| if d.abs() <= eps { d / eps } else { d.signum() };
            for r in 0..h {
                for c in 0..w {
                    let k = r * w + c;
                    if c + 1 < w {
                        let g = lambda * huber(z[k + 1] - z[k]);
                        grad[k + 1] += g;
                        grad[k] -= g;
                    }
                    if r + 1 < h {
                        let g = lambda * huber(z[k + w] - z[k]);
                        grad[k + w] += g;
                        grad[k] -= g;
                    }
                }
            }
            prev = std::mem::replace(
                &mut u,
                z.iter()
                    .zip(&grad)
                    .map(|(a, g)| a - g / lipschitz)
                    .collect(),
            );
        }
    }
    u
}

/// Deterministic uniform values in `[0, 1)` (SplitMix64).
pub struct Uniform(u64);

impl Uniform {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

pub fn testset_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/testset")
}

/// The bundled 256x256 grayscale test images, sorted by name.
pub fn load_testset() -> Vec<(String, Frame)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(testset_dir())
        .expect("data/testset exists")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let frame = pnm::read_pgm(&std::fs::read(&p).unwrap()).unwrap();
            (name, frame)
        })
        .collect()
}

/// Central `size x size` crop.
pub fn center_crop(frame: &Frame, size: usize) -> Frame {
    let (h, w) = frame.dims();
    frame
        .crop((h - size) / 2, (w - size) / 2, size, size)
        .unwrap()
}
