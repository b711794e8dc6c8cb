//! Whole-stream encode/decode: everything needed to go from images to
//! container payloads and back, rebuilt deterministically from a header.

use crate::baselines::{BlockCsOperator, RandomDsPattern};
use crate::color::{chroma_down, chroma_up, rgb_to_yuv, yuv_to_rgb, RgbFrame, YuvPlanes};
use crate::container::{write_stream, CodecId, ColorMode, FramePayload, StreamHeader};
use crate::denoiser::{denoiser_for, Denoiser};
use crate::encoder::{bmvc_quant_spec, dequantize_values, quantize_values, Encoder, OpCounts};
use crate::error::{mismatch, Error, Result};
use crate::mask::{build_lut, generate_mask, MaskPlane};
use crate::model::{BlockGeometry, DecodeConfig, Frame, QuantSpec};
use crate::operator::{BmvcOperator, GapOperator};
use crate::pnp::{pnp_gap_with, DecodeOutput};

/// An input picture.
#[derive(Debug, Clone, PartialEq)]
pub enum Image {
    Gray(Frame),
    Rgb(RgbFrame),
}

impl Image {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Image::Gray(f) => f.dims(),
            Image::Rgb(rgb) => (rgb.height(), rgb.width()),
        }
    }

    /// The plane the codec compresses: the frame itself, or BT.601 luma.
    pub fn luma(&self) -> Frame {
        match self {
            Image::Gray(f) => f.clone(),
            Image::Rgb(rgb) => rgb_to_yuv(rgb).y.clipped(),
        }
    }
}

enum LumaCodec {
    Bmvc {
        encoder: Encoder,
        op: BmvcOperator,
        counting: bool,
    },
    RandomDs(RandomDsPattern),
    BlockCs(BlockCsOperator),
}

/// Codec state derived from a stream header: mask or sensing pattern,
/// operator and quantizer.
pub struct StreamCodec {
    header: StreamHeader,
    luma: LumaCodec,
    quant: QuantSpec,
}

#[derive(Debug, Clone)]
pub struct DecodedFrame {
    /// Luma (or gray) reconstruction with its iteration trace.
    pub luma: DecodeOutput,
    /// Full-color reconstruction for color streams.
    pub rgb: Option<RgbFrame>,
}

impl StreamCodec {
    pub fn new(header: &StreamHeader) -> Result<Self> {
        Self::build(header, false)
    }

    /// Like [`StreamCodec::new`], but BMVC encodes count their pixel
    /// arithmetic (slower).
    pub fn instrumented(header: &StreamHeader) -> Result<Self> {
        Self::build(header, true)
    }

    fn build(header: &StreamHeader, instrumented: bool) -> Result<Self> {
        header.validate()?;
        let geom = header.geometry()?;
        let (h, w) = (geom.frame_height(), geom.frame_width());
        let (luma, quant) = match header.codec {
            CodecId::Bmvc => {
                let lut = build_lut(&stream_mask(header.seed, &geom)?, &geom)?;
                let quant = bmvc_quant_spec(header.bits, &lut)?;
                let op = BmvcOperator::new(lut.clone());
                let encoder = if instrumented {
                    Encoder::instrumented(lut)
                } else {
                    Encoder::new(lut)
                };
                (
                    LumaCodec::Bmvc {
                        encoder,
                        op,
                        counting: instrumented,
                    },
                    quant,
                )
            }
            CodecId::RandomDs => {
                let pattern = RandomDsPattern::new(header.seed, h, w, geom.block_len())?;
                (
                    LumaCodec::RandomDs(pattern),
                    QuantSpec::new(header.bits, 1.0)?,
                )
            }
            CodecId::BlockCs => {
                let op = BlockCsOperator::new(header.seed, h, w, header.block_cs_measurements()?)?;
                let quant = QuantSpec::new(header.bits, op.dynamic_range())?;
                (LumaCodec::BlockCs(op), quant)
            }
        };
        Ok(Self {
            header: *header,
            luma,
            quant,
        })
    }

    pub fn header(&self) -> &StreamHeader {
        &self.header
    }

    pub fn quant_spec(&self) -> &QuantSpec {
        &self.quant
    }

    pub fn operator(&self) -> &dyn GapOperator {
        match &self.luma {
            LumaCodec::Bmvc { op, .. } => op,
            LumaCodec::RandomDs(p) => p,
            LumaCodec::BlockCs(op) => op,
        }
    }

    /// Seed the block CS matrix was finally drawn from (after any resampling).
    pub fn effective_seed(&self) -> u64 {
        match &self.luma {
            LumaCodec::BlockCs(op) => op.seed(),
            _ => self.header.seed,
        }
    }

    /// Unquantized measurements of a luma plane, plus the pixel arithmetic
    /// spent on them when it is known (always for the baselines, only for
    /// instrumented codecs for BMVC).
    pub fn measure(&self, luma: &Frame) -> Result<(Vec<f64>, Option<OpCounts>)> {
        let (h, w) = self.operator().frame_dims();
        luma.check_dims(h, w)?;
        match &self.luma {
            LumaCodec::Bmvc {
                encoder, counting, ..
            } => {
                let y = encoder.encode(luma)?.into_values();
                Ok((y, counting.then(|| encoder.op_counters())))
            }
            LumaCodec::RandomDs(p) => Ok((p.forward(luma.data()), Some(OpCounts::default()))),
            LumaCodec::BlockCs(op) => op.encode_with_counts(luma).map(|(y, ops)| (y, Some(ops))),
        }
    }

    pub fn quantize(&self, measurements: &[f64]) -> Result<Vec<u16>> {
        quantize_values(measurements, &self.quant)
    }

    pub fn dequantize(&self, codes: &[u16]) -> Result<Vec<f64>> {
        dequantize_values(codes, &self.quant)
    }

    /// Encode one image into a frame payload.
    pub fn encode(&self, image: &Image) -> Result<(FramePayload, Option<OpCounts>)> {
        let dims = self.operator().frame_dims();
        if image.dims() != dims {
            return Err(mismatch(
                format!("{}x{}", dims.0, dims.1),
                format!("{:?}", image.dims()),
            ));
        }
        match (self.header.color, image) {
            (ColorMode::Gray, Image::Gray(frame)) => {
                let (y, ops) = self.measure(frame)?;
                Ok((FramePayload::gray(self.quantize(&y)?), ops))
            }
            (ColorMode::Yuv, Image::Rgb(rgb)) => {
                let YuvPlanes { y, u, v } = rgb_to_yuv(rgb);
                let (m, ops) = self.measure(&y.clipped())?;
                Ok((
                    FramePayload {
                        luma: self.quantize(&m)?,
                        u: self.encode_chroma(&u)?,
                        v: self.encode_chroma(&v)?,
                    },
                    ops,
                ))
            }
            (ColorMode::Gray, Image::Rgb(_)) => {
                Err(Error::Config("color image in a gray stream".into()))
            }
            (ColorMode::Yuv, Image::Gray(_)) => {
                Err(Error::Config("gray image in a color stream".into()))
            }
        }
    }

    fn chroma_spec(&self) -> Result<QuantSpec> {
        QuantSpec::new(self.header.bits, 1.0)
    }

    fn encode_chroma(&self, plane: &Frame) -> Result<Vec<u16>> {
        let small = chroma_down(&plane.clipped(), usize::from(self.header.chroma_factor))?;
        quantize_values(small.data(), &self.chroma_spec()?)
    }

    fn decode_chroma(&self, codes: &[u16]) -> Result<Frame> {
        let f = usize::from(self.header.chroma_factor);
        let (h, w) = self.operator().frame_dims();
        let small = Frame::new(
            h / f,
            w / f,
            dequantize_values(codes, &self.chroma_spec()?)?,
        )?;
        chroma_up(&small, f)
    }

    /// Reconstruct a luma plane from its codes.
    pub fn decode_luma(
        &self,
        codes: &[u16],
        cfg: &DecodeConfig,
        reference: Option<&Frame>,
    ) -> Result<DecodeOutput> {
        self.decode_luma_with(codes, cfg, &*denoiser_for(cfg.denoiser), reference)
    }

    /// [`StreamCodec::decode_luma`] with a caller-supplied denoiser.
    pub fn decode_luma_with(
        &self,
        codes: &[u16],
        cfg: &DecodeConfig,
        denoiser: &dyn Denoiser,
        reference: Option<&Frame>,
    ) -> Result<DecodeOutput> {
        let y = self.dequantize(codes)?;
        pnp_gap_with(self.operator(), denoiser, &y, cfg, None, reference)
    }

    /// Decode a payload; `reference` is the original luma (or gray) plane.
    pub fn decode(
        &self,
        payload: &FramePayload,
        cfg: &DecodeConfig,
        reference: Option<&Frame>,
    ) -> Result<DecodedFrame> {
        let luma = self.decode_luma(&payload.luma, cfg, reference)?;
        let rgb = match self.header.color {
            ColorMode::Gray => None,
            ColorMode::Yuv => {
                let planes = YuvPlanes {
                    y: luma.frame.clone(),
                    u: self.decode_chroma(&payload.u)?,
                    v: self.decode_chroma(&payload.v)?,
                };
                Some(clip_rgb(yuv_to_rgb(&planes)?))
            }
        };
        Ok(DecodedFrame { luma, rgb })
    }

    /// Serialize payloads under this codec's header.
    pub fn write(&self, frames: &[FramePayload]) -> Result<Vec<u8>> {
        let mut header = self.header;
        header.frame_count =
            u32::try_from(frames.len()).map_err(|_| Error::Format("too many frames".into()))?;
        write_stream(&header, frames)
    }
}

/// The mask a stream uses. With a single block nothing is multiplexed,
/// so a random mask would only discard pixels; such streams use all ones.
pub fn stream_mask(seed: u64, geom: &BlockGeometry) -> Result<MaskPlane> {
    let (h, w) = (geom.frame_height(), geom.frame_width());
    if geom.block_count() == 1 {
        Ok(MaskPlane::filled(h, w, true))
    } else {
        generate_mask(seed, h, w)
    }
}

fn clip_rgb(rgb: RgbFrame) -> RgbFrame {
    let data = rgb.data().iter().map(|v| v.clamp(0.0, 1.0)).collect();
    RgbFrame::new(rgb.height(), rgb.width(), 3, data).expect("same shape")
}
