//! Block-modulating video compression.
//!
//! The encoder masks a frame with a seeded binary pattern, cuts it into
//! `N_b` equal blocks and sums them: one block-sized measurement, a
//! compression ratio of `N_b`, and nothing but additions. The decoder
//! inverts this with plug-and-play GAP, alternating an exact
//! measurement-consistency projection with a denoiser.
//!
//! ```
//! use bmvc::{BlockGeometry, CodecId, DecodeConfig, Frame, Image, StreamCodec, StreamHeader};
//!
//! let frame = Frame::from_fn(32, 32, |r, c| ((r / 8 + c / 8) % 2) as f64 * 0.5 + 0.25);
//! let geom = BlockGeometry::new(32, 32, 16, 16).unwrap(); // Cr = 4
//! let codec = StreamCodec::new(&StreamHeader::new(CodecId::Bmvc, &geom, 7, 8).unwrap()).unwrap();
//! let (payload, _) = codec.encode(&Image::Gray(frame.clone())).unwrap();
//! assert_eq!(payload.luma.len(), 16 * 16);
//! let out = codec.decode(&payload, &DecodeConfig::default(), Some(&frame)).unwrap();
//! assert_eq!(out.luma.frame.dims(), (32, 32));
//! ```

pub mod baselines;
pub mod codec;
pub mod color;
pub mod container;
pub mod denoiser;
pub mod encoder;
pub mod error;
pub mod mask;
pub mod metrics;
pub mod model;
pub mod operator;
pub mod pnm;
pub mod pnp;
pub mod rng;

#[cfg(test)]
mod oracle;

pub use codec::{DecodedFrame, Image, StreamCodec};
pub use color::RgbFrame;
pub use container::{
    read_stream, write_stream, CodecId, ColorMode, FramePayload, Stream, StreamHeader,
};
pub use denoiser::DenoiserKind;
pub use encoder::{Encoder, OpCounts};
pub use error::{Error, Result};
pub use mask::{build_lut, generate_mask, MaskLut, MaskPlane};
pub use metrics::{psnr, ssim};
pub use model::{BlockGeometry, DecodeConfig, Frame, Measurement, QuantSpec, SigmaStage};
pub use operator::{BmvcOperator, GapOperator};
pub use pnp::{decode, DecodeOutput, TraceEntry};
