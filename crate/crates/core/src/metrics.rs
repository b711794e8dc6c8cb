//! PSNR and SSIM on `[0, 1]` planes.

use crate::error::{mismatch, Error, Result};
use crate::model::Frame;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn check_same(a: &Frame, b: &Frame) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(mismatch(
            format!("{}x{}", a.height(), a.width()),
            format!("{}x{}", b.height(), b.width()),
        ));
    }
    Ok(())
}

pub fn mse(reference: &Frame, test: &Frame) -> Result<f64> {
    check_same(reference, test)?;
    let sum: f64 = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// `10 log10(1 / MSE)` with peak 1; identical frames give `+inf`.
pub fn psnr(reference: &Frame, test: &Frame) -> Result<f64> {
    let e = mse(reference, test)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / e).log10())
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let center = (SSIM_WINDOW / 2) as f64;
    for (k, t) in taps.iter_mut().enumerate() {
        let d = k as f64 - center;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable "valid" filtering: output is `(h - 10) x (w - 10)`.
fn filter_valid(data: &[f64], h: usize, w: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * data[r * w + c + k])
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * rows[(r + k) * ow + c])
                .sum();
        }
    }
    out
}

/// Mean SSIM over all fully-contained 11x11 Gaussian windows
/// (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1).
pub fn ssim(reference: &Frame, test: &Frame) -> Result<f64> {
    check_same(reference, test)?;
    let (h, w) = reference.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Geometry(format!(
            "SSIM needs at least 11x11, got {h}x{w}"
        )));
    }
    let taps = gaussian_taps();
    let x = reference.data();
    let y = test.data();
    let product = |f: &dyn Fn(usize) -> f64| (0..x.len()).map(f).collect::<Vec<f64>>();
    let mu_x = filter_valid(x, h, w, &taps);
    let mu_y = filter_valid(y, h, w, &taps);
    let xx = filter_valid(&product(&|k| x[k] * x[k]), h, w, &taps);
    let yy = filter_valid(&product(&|k| y[k] * y[k]), h, w, &taps);
    let xy = filter_valid(&product(&|k| x[k] * y[k]), h, w, &taps);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let total: f64 = (0..mu_x.len())
        .map(|k| {
            let (mx, my) = (mu_x[k], mu_y[k]);
            let vx = xx[k] - mx * mx;
            let vy = yy[k] - my * my;
            let cov = xy[k] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}
