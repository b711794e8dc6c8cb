//! `.bmvc` stream format.
//!
//! A 29-byte big-endian header followed by one payload per frame. Every
//! code is stored as a big-endian `u16` whatever the bit depth. A payload
//! is the luma codes, then (in color mode) the U codes and the V codes of
//! the decimated chroma planes.
//!
//! ```text
//! offset size field
//!      0    4 magic "BMVC"
//!      4    1 version (1)
//!      5    1 codec id: 0 BMVC, 1 random down-sampling, 2 block CS
//!      6    2 frame height
//!      8    2 frame width
//!     10    2 block height
//!     12    2 block width
//!     14    8 seed
//!     22    1 bits per code (8..=16)
//!     23    1 color mode: 0 gray, 1 Y + decimated UV
//!     24    1 chroma decimation factor (1 for gray)
//!     25    4 frame count
//! ```
//!
//! The block shape always fixes the nominal compression ratio
//! `Cr = (N_h / B_h) · (N_w / B_w)`. What a luma payload holds depends on
//! the codec: BMVC stores the `B_h x B_w` summed block, random
//! down-sampling stores `B_h · B_w` pixel samples, and block CS stores
//! `round(576 / Cr)` measurements for each 24x24 block.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{BLOCK_CS_LEN, BLOCK_CS_SIZE};
use crate::error::{Error, Result};
use crate::model::BlockGeometry;

pub const MAGIC: [u8; 4] = *b"BMVC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 29;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodecId {
    Bmvc,
    RandomDs,
    BlockCs,
}

impl CodecId {
    pub const ALL: [CodecId; 3] = [CodecId::Bmvc, CodecId::RandomDs, CodecId::BlockCs];

    pub fn to_byte(self) -> u8 {
        match self {
            CodecId::Bmvc => 0,
            CodecId::RandomDs => 1,
            CodecId::BlockCs => 2,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(CodecId::Bmvc),
            1 => Ok(CodecId::RandomDs),
            2 => Ok(CodecId::BlockCs),
            _ => Err(Error::Format(format!("unknown codec id {b}"))),
        }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodecId::Bmvc => "bmvc",
            CodecId::RandomDs => "random-ds",
            CodecId::BlockCs => "block-cs",
        })
    }
}

impl FromStr for CodecId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bmvc" => Ok(CodecId::Bmvc),
            "random-ds" | "randomds" | "ds" => Ok(CodecId::RandomDs),
            "block-cs" | "blockcs" | "cs" => Ok(CodecId::BlockCs),
            other => Err(Error::Config(format!(
                "unknown codec '{other}' (expected bmvc, random-ds or block-cs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorMode {
    Gray,
    /// Luma coded by the codec, chroma box-decimated and quantized directly.
    Yuv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub codec: CodecId,
    pub frame_height: u16,
    pub frame_width: u16,
    pub block_height: u16,
    pub block_width: u16,
    pub seed: u64,
    pub bits: u8,
    pub color: ColorMode,
    pub chroma_factor: u8,
    pub frame_count: u32,
}

fn dim16(value: usize, what: &str) -> Result<u16> {
    u16::try_from(value).map_err(|_| Error::Geometry(format!("{what} {value} exceeds 65535")))
}

impl StreamHeader {
    /// Gray header with no frames; see [`StreamHeader::with_chroma`].
    pub fn new(codec: CodecId, geom: &BlockGeometry, seed: u64, bits: u8) -> Result<Self> {
        let header = Self {
            codec,
            frame_height: dim16(geom.frame_height(), "frame height")?,
            frame_width: dim16(geom.frame_width(), "frame width")?,
            block_height: dim16(geom.block_height(), "block height")?,
            block_width: dim16(geom.block_width(), "block width")?,
            seed,
            bits,
            color: ColorMode::Gray,
            chroma_factor: 1,
            frame_count: 0,
        };
        header.validate()?;
        Ok(header)
    }

    pub fn with_chroma(mut self, factor: usize) -> Result<Self> {
        self.color = ColorMode::Yuv;
        self.chroma_factor = u8::try_from(factor)
            .map_err(|_| Error::Geometry(format!("chroma factor {factor} exceeds 255")))?;
        self.validate()?;
        Ok(self)
    }

    pub fn geometry(&self) -> Result<BlockGeometry> {
        BlockGeometry::new(
            usize::from(self.frame_height),
            usize::from(self.frame_width),
            usize::from(self.block_height),
            usize::from(self.block_width),
        )
    }

    pub fn compression_ratio(&self) -> Result<usize> {
        Ok(self.geometry()?.compression_ratio())
    }

    /// Block CS measurements per 24x24 block.
    pub fn block_cs_measurements(&self) -> Result<usize> {
        let cr = self.compression_ratio()?;
        Ok(((BLOCK_CS_LEN as f64 / cr as f64).round() as usize).max(1))
    }

    /// Checks every invariant a reader relies on.
    pub fn validate(&self) -> Result<()> {
        let geom = self.geometry()?;
        if !(8..=16).contains(&self.bits) {
            return Err(Error::Format(format!("bits {} outside 8..=16", self.bits)));
        }
        if self.codec == CodecId::BlockCs
            && (geom.frame_height() % BLOCK_CS_SIZE != 0 || geom.frame_width() % BLOCK_CS_SIZE != 0)
        {
            return Err(Error::Format(format!(
                "block CS needs frame dimensions divisible by {BLOCK_CS_SIZE}, got {}x{}",
                self.frame_height, self.frame_width
            )));
        }
        let f = usize::from(self.chroma_factor);
        match self.color {
            ColorMode::Gray if f != 1 => {
                return Err(Error::Format(format!("gray stream with chroma factor {f}")));
            }
            ColorMode::Yuv
                if f == 0 || geom.frame_height() % f != 0 || geom.frame_width() % f != 0 =>
            {
                return Err(Error::Format(format!(
                    "chroma factor {f} does not divide {}x{}",
                    self.frame_height, self.frame_width
                )));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn luma_codes_per_frame(&self) -> Result<usize> {
        let geom = self.geometry()?;
        Ok(match self.codec {
            CodecId::Bmvc | CodecId::RandomDs => geom.block_len(),
            CodecId::BlockCs => self.block_cs_measurements()? * geom.frame_len() / BLOCK_CS_LEN,
        })
    }

    /// Codes in each decimated chroma plane (0 for gray).
    pub fn chroma_codes_per_plane(&self) -> usize {
        match self.color {
            ColorMode::Gray => 0,
            ColorMode::Yuv => {
                let f = usize::from(self.chroma_factor).max(1);
                (usize::from(self.frame_height) / f) * (usize::from(self.frame_width) / f)
            }
        }
    }

    pub fn codes_per_frame(&self) -> Result<usize> {
        Ok(self.luma_codes_per_frame()? + 2 * self.chroma_codes_per_plane())
    }

    /// Total stream size in bytes.
    pub fn stream_len(&self) -> Result<usize> {
        Ok(HEADER_LEN + 2 * self.codes_per_frame()? * self.frame_count as usize)
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = self.codec.to_byte();
        out[6..8].copy_from_slice(&self.frame_height.to_be_bytes());
        out[8..10].copy_from_slice(&self.frame_width.to_be_bytes());
        out[10..12].copy_from_slice(&self.block_height.to_be_bytes());
        out[12..14].copy_from_slice(&self.block_width.to_be_bytes());
        out[14..22].copy_from_slice(&self.seed.to_be_bytes());
        out[22] = self.bits;
        out[23] = match self.color {
            ColorMode::Gray => 0,
            ColorMode::Yuv => 1,
        };
        out[24] = self.chroma_factor;
        out[25..29].copy_from_slice(&self.frame_count.to_be_bytes());
        out
    }

    fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "truncated header: {} bytes",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let u16_at = |k: usize| u16::from_be_bytes([bytes[k], bytes[k + 1]]);
        let color = match bytes[23] {
            0 => ColorMode::Gray,
            1 => ColorMode::Yuv,
            other => return Err(Error::Format(format!("unknown color mode {other}"))),
        };
        let header = Self {
            codec: CodecId::from_byte(bytes[5])?,
            frame_height: u16_at(6),
            frame_width: u16_at(8),
            block_height: u16_at(10),
            block_width: u16_at(12),
            seed: u64::from_be_bytes(bytes[14..22].try_into().expect("8 bytes")),
            bits: bytes[22],
            color,
            chroma_factor: bytes[24],
            frame_count: u32::from_be_bytes(bytes[25..29].try_into().expect("4 bytes")),
        };
        header.validate().map_err(|e| match e {
            Error::Format(_) => e,
            other => Error::Format(other.to_string()),
        })?;
        Ok(header)
    }
}

/// Codes for one frame. `u` and `v` are empty in gray streams.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FramePayload {
    pub luma: Vec<u16>,
    pub u: Vec<u16>,
    pub v: Vec<u16>,
}

impl FramePayload {
    pub fn gray(luma: Vec<u16>) -> Self {
        Self {
            luma,
            ..Self::default()
        }
    }

    fn check(&self, header: &StreamHeader, index: usize) -> Result<()> {
        let luma = header.luma_codes_per_frame()?;
        let chroma = header.chroma_codes_per_plane();
        if self.luma.len() != luma || self.u.len() != chroma || self.v.len() != chroma {
            return Err(Error::Format(format!(
                "frame {index}: expected {luma}+{chroma}+{chroma} codes, got {}+{}+{}",
                self.luma.len(),
                self.u.len(),
                self.v.len()
            )));
        }
        let max = ((1u32 << header.bits) - 1) as u16;
        if let Some(&code) = self.codes().find(|&&c| c > max) {
            return Err(Error::CodeRange {
                index,
                code,
                bits: header.bits,
            });
        }
        Ok(())
    }

    fn codes(&self) -> impl Iterator<Item = &u16> {
        self.luma.iter().chain(&self.u).chain(&self.v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stream {
    pub header: StreamHeader,
    pub frames: Vec<FramePayload>,
}

pub fn write_stream(header: &StreamHeader, frames: &[FramePayload]) -> Result<Vec<u8>> {
    header.validate()?;
    if frames.len() != header.frame_count as usize {
        return Err(Error::Format(format!(
            "header declares {} frames, got {}",
            header.frame_count,
            frames.len()
        )));
    }
    for (k, f) in frames.iter().enumerate() {
        f.check(header, k)?;
    }
    let mut out = Vec::with_capacity(header.stream_len()?);
    out.extend_from_slice(&header.to_bytes());
    for f in frames {
        for code in f.codes() {
            out.extend_from_slice(&code.to_be_bytes());
        }
    }
    Ok(out)
}

/// Parses a whole stream. The payload length must match the header
/// exactly; nothing is allocated until it does.
pub fn read_stream(bytes: &[u8]) -> Result<Stream> {
    let header = StreamHeader::parse(bytes)?;
    let payload = &bytes[HEADER_LEN..];
    let per_frame = header.codes_per_frame()?;
    let expected = (per_frame as u64) * 2 * u64::from(header.frame_count);
    if payload.len() as u64 != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let luma = header.luma_codes_per_frame()?;
    let chroma = header.chroma_codes_per_plane();
    let max = ((1u32 << header.bits) - 1) as u16;
    let mut frames = Vec::with_capacity(header.frame_count as usize);
    if per_frame > 0 {
        for (k, chunk) in payload.chunks_exact(2 * per_frame).enumerate() {
            let codes: Vec<u16> = chunk
                .chunks_exact(2)
                .map(|p| u16::from_be_bytes([p[0], p[1]]))
                .collect();
            if let Some(&code) = codes.iter().find(|&&c| c > max) {
                return Err(Error::CodeRange {
                    index: k,
                    code,
                    bits: header.bits,
                });
            }
            frames.push(FramePayload {
                luma: codes[..luma].to_vec(),
                u: codes[luma..luma + chroma].to_vec(),
                v: codes[luma + chroma..].to_vec(),
            });
        }
    }
    Ok(Stream { header, frames })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray_header(frame_count: u32) -> StreamHeader {
        StreamHeader {
            codec: CodecId::Bmvc,
            frame_height: 4,
            frame_width: 4,
            block_height: 2,
            block_width: 2,
            seed: 42,
            bits: 8,
            color: ColorMode::Gray,
            chroma_factor: 1,
            frame_count,
        }
    }

    /// One gray 4x4 frame, 2x2 blocks, seed 42, 8 bits, codes 1..=4.
    const GOLDEN: [u8; 37] = [
        b'B', b'M', b'V', b'C', 1, 0, 0, 4, 0, 4, 0, 2, 0, 2, 0, 0, 0, 0, 0, 0, 0, 42, 8, 0, 1, 0,
        0, 0, 1, 0, 1, 0, 2, 0, 3, 0, 4,
    ];

    #[test]
    fn golden_bytes() {
        let frames = vec![FramePayload::gray(vec![1, 2, 3, 4])];
        let bytes = write_stream(&gray_header(1), &frames).unwrap();
        assert_eq!(bytes, GOLDEN);
        let back = read_stream(&GOLDEN).unwrap();
        assert_eq!(back.header, gray_header(1));
        assert_eq!(back.frames, frames);
        assert_eq!(gray_header(1).stream_len().unwrap(), GOLDEN.len());
    }

    #[test]
    fn header_only_stream() {
        let bytes = write_stream(&gray_header(0), &[]).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN);
        let s = read_stream(&bytes).unwrap();
        assert_eq!(s.header.frame_count, 0);
        assert!(s.frames.is_empty());
    }

    #[test]
    fn corrupted_magic_and_truncation() {
        let mut bad = GOLDEN;
        bad[0] = b'X';
        assert!(matches!(read_stream(&bad), Err(Error::Format(_))));
        assert!(read_stream(&GOLDEN[..GOLDEN.len() - 1]).is_err());
        assert!(read_stream(&GOLDEN[..10]).is_err());
        let mut long = GOLDEN.to_vec();
        long.extend([0, 0]);
        assert!(read_stream(&long).is_err());
    }

    #[test]
    fn invalid_headers_rejected() {
        let mut h = gray_header(0);
        h.block_height = 3;
        assert!(write_stream(&h, &[]).is_err());
        let mut h = gray_header(0);
        h.bits = 17;
        assert!(write_stream(&h, &[]).is_err());
        let mut h = gray_header(0);
        h.chroma_factor = 2;
        assert!(write_stream(&h, &[]).is_err());
        let mut h = gray_header(0);
        h.codec = CodecId::BlockCs;
        assert!(write_stream(&h, &[]).is_err());
        for (offset, value) in [(4, 2u8), (5, 3), (22, 7), (23, 2)] {
            let mut bytes = GOLDEN;
            bytes[offset] = value;
            assert!(read_stream(&bytes).is_err(), "offset {offset}");
        }
    }

    #[test]
    fn code_range_and_count_checked() {
        let mut h = gray_header(1);
        assert!(write_stream(&h, &[FramePayload::gray(vec![1, 2, 3, 256])]).is_err());
        assert!(write_stream(&h, &[FramePayload::gray(vec![1, 2, 3])]).is_err());
        assert!(write_stream(&h, &[]).is_err());
        h.bits = 9;
        assert!(write_stream(&h, &[FramePayload::gray(vec![1, 2, 3, 256])]).is_ok());
        let mut bytes = GOLDEN;
        bytes[36] = 0xff;
        bytes[35] = 0x01;
        assert!(matches!(read_stream(&bytes), Err(Error::CodeRange { .. })));
    }

    #[test]
    fn payload_sizes_per_codec() {
        let mut h = StreamHeader {
            codec: CodecId::Bmvc,
            frame_height: 48,
            frame_width: 96,
            block_height: 12,
            block_width: 24,
            seed: 1,
            bits: 12,
            color: ColorMode::Yuv,
            chroma_factor: 4,
            frame_count: 2,
        };
        assert_eq!(h.compression_ratio().unwrap(), 16);
        assert_eq!(h.luma_codes_per_frame().unwrap(), 288);
        assert_eq!(h.chroma_codes_per_plane(), 12 * 24);
        h.codec = CodecId::RandomDs;
        assert_eq!(h.luma_codes_per_frame().unwrap(), 288);
        h.codec = CodecId::BlockCs;
        assert_eq!(h.block_cs_measurements().unwrap(), 36);
        assert_eq!(h.luma_codes_per_frame().unwrap(), 36 * 8);
        assert_eq!(
            h.stream_len().unwrap(),
            HEADER_LEN + 2 * 2 * (288 + 2 * 288)
        );
    }

    #[test]
    fn color_round_trip() {
        let h = StreamHeader {
            codec: CodecId::RandomDs,
            frame_height: 8,
            frame_width: 8,
            block_height: 4,
            block_width: 4,
            seed: u64::MAX,
            bits: 16,
            color: ColorMode::Yuv,
            chroma_factor: 2,
            frame_count: 2,
        };
        let frames: Vec<FramePayload> = (0..2u16)
            .map(|f| FramePayload {
                luma: (0..16).map(|k| k * 4000 + f).collect(),
                u: (0..16).map(|k| 65535 - k).collect(),
                v: (0..16).map(|k| k * f).collect(),
            })
            .collect();
        let bytes = write_stream(&h, &frames).unwrap();
        assert_eq!(bytes.len(), h.stream_len().unwrap());
        let s = read_stream(&bytes).unwrap();
        assert_eq!((s.header, s.frames), (h, frames));
    }

    #[test]
    fn codec_names() {
        for c in CodecId::ALL {
            assert_eq!(c.to_string().parse::<CodecId>().unwrap(), c);
            assert_eq!(CodecId::from_byte(c.to_byte()).unwrap(), c);
        }
        assert!("jpeg".parse::<CodecId>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn arbitrary_bytes_parse_or_fail_cleanly(bytes in prop::collection::vec(any::<u8>(), 0..96)) {
                if let Ok(s) = read_stream(&bytes) {
                    prop_assert_eq!(write_stream(&s.header, &s.frames).unwrap(), bytes);
                }
            }

            #[test]
            fn mutated_golden_parse_or_fail_cleanly(pos in 0usize..37, value in any::<u8>()) {
                let mut bytes = GOLDEN;
                bytes[pos] = value;
                if let Ok(s) = read_stream(&bytes) {
                    prop_assert_eq!(write_stream(&s.header, &s.frames).unwrap(), bytes.to_vec());
                }
            }
        }
    }
}
