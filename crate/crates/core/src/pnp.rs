//! Plug-and-play GAP decoder: alternate the measurement-consistency
//! projection with a denoising step under a decreasing sigma schedule.

use std::fmt::Write as _;

use crate::denoiser::{denoiser_for, DenoiseStrength, Denoiser};
use crate::error::{mismatch, Result};
use crate::metrics::psnr;
use crate::model::{DecodeConfig, Frame, Measurement};
use crate::operator::{BmvcOperator, GapOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// 1-based iteration number.
    pub iteration: usize,
    pub sigma: f64,
    /// `‖y - Φx‖∞` right after the projection step.
    pub projection_residual: f64,
    /// `‖y - Φv‖₂` after the denoising step.
    pub residual: f64,
    /// PSNR of the denoised iterate (clipped) against a reference, if given.
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DecodeOutput {
    pub frame: Frame,
    pub trace: Vec<TraceEntry>,
}

/// Decode a BMVC measurement.
pub fn decode(
    y: &Measurement,
    op: &BmvcOperator,
    cfg: &DecodeConfig,
    init: Option<&Frame>,
) -> Result<DecodeOutput> {
    decode_with_reference(y, op, cfg, init, None)
}

pub fn decode_with_reference(
    y: &Measurement,
    op: &BmvcOperator,
    cfg: &DecodeConfig,
    init: Option<&Frame>,
    reference: Option<&Frame>,
) -> Result<DecodeOutput> {
    y.check_block(op.geometry())?;
    op.check_measurement_len(y.len())?;
    pnp_gap(op, y.values(), cfg, init, reference)
}

/// The generic PnP-GAP loop.
///
/// Starting from `v⁰ = Φᵀ(ΦΦᵀ)⁺y` (or `init`), each iteration computes
/// `x = v + Φᵀ(ΦΦᵀ)⁺(y - Φv)` and then `v = Denoise(x)`. The returned
/// frame is the projection of the last `v`, clipped to `[0, 1]`, so the
/// output is always consistent with the measurement.
pub fn pnp_gap<O: GapOperator + ?Sized>(
    op: &O,
    y: &[f64],
    cfg: &DecodeConfig,
    init: Option<&Frame>,
    reference: Option<&Frame>,
) -> Result<DecodeOutput> {
    pnp_gap_with(op, &*denoiser_for(cfg.denoiser), y, cfg, init, reference)
}

/// [`pnp_gap`] with a caller-supplied denoiser; `cfg.denoiser` is ignored.
pub fn pnp_gap_with<O: GapOperator + ?Sized>(
    op: &O,
    denoiser: &dyn Denoiser,
    y: &[f64],
    cfg: &DecodeConfig,
    init: Option<&Frame>,
    reference: Option<&Frame>,
) -> Result<DecodeOutput> {
    cfg.validate()?;
    let (h, w) = op.frame_dims();
    if y.len() != op.measurement_len() {
        return Err(mismatch(op.measurement_len(), y.len()));
    }
    if let Some(r) = reference {
        r.check_dims(h, w)?;
    }
    let mut v = match init {
        Some(frame) => {
            frame.check_dims(h, w)?;
            frame.clone()
        }
        None => Frame::new(h, w, op.backproject(y))?,
    };

    let mut trace = Vec::with_capacity(cfg.iterations());
    for (k, sigma) in cfg.sigma_sequence().enumerate() {
        op.project(v.data_mut(), y);
        let projection_residual = residual_inf(op, v.data(), y);
        v = denoiser.denoise(&v, DenoiseStrength::new(sigma)?)?;
        let residual = residual_l2(op, v.data(), y);
        let psnr = reference.map(|r| psnr(r, &v.clipped())).transpose()?;
        trace.push(TraceEntry {
            iteration: k + 1,
            sigma,
            projection_residual,
            residual,
            psnr,
        });
    }
    op.project(v.data_mut(), y);
    Ok(DecodeOutput {
        frame: v.clipped(),
        trace,
    })
}

fn residual_inf<O: GapOperator + ?Sized>(op: &O, x: &[f64], y: &[f64]) -> f64 {
    op.forward(x)
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn residual_l2<O: GapOperator + ?Sized>(op: &O, x: &[f64], y: &[f64]) -> f64 {
    op.forward(x)
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// CSV with header `iteration,sigma,projection_residual,residual,psnr`;
/// the psnr column is empty when no reference was given.
pub fn trace_to_csv(trace: &[TraceEntry]) -> String {
    let mut out = String::from("iteration,sigma,projection_residual,residual,psnr\n");
    for t in trace {
        let psnr = t.psnr.map(|p| format!("{p:.6}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{}",
            t.iteration, t.sigma, t.projection_residual, t.residual, psnr
        );
    }
    out
}
