//! Binary Netpbm images: PGM (P5) and PPM (P6) in and out, PBM (P4) out.

use crate::color::RgbFrame;
use crate::error::{Error, Result};
use crate::model::Frame;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmImage {
    pub width: usize,
    pub height: usize,
    /// 1 for P5, 3 for P6.
    pub channels: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Image(msg.into())
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
            if self.pos - start > 9 {
                return Err(bad(format!("{what} too large")));
            }
        }
        if start == self.pos {
            return Err(bad(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("bad {what}")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(bad("not a binary netpbm file"));
    }
    let channels = match bytes[1] {
        b'5' => 1,
        b'6' => 3,
        other => return Err(bad(format!("unsupported netpbm type P{}", other as char))),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(bad("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad(format!("maxval {maxval} outside 1..=65535")));
    }
    // exactly one whitespace byte separates the header from the raster
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(bad("missing raster separator"));
    }
    let raster = &bytes[cur.pos + 1..];
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| bad("image too large"))?;
    let needed = count
        .checked_mul(bytes_per_sample)
        .ok_or_else(|| bad("image too large"))?;
    if raster.len() < needed {
        return Err(bad(format!(
            "truncated raster: {} of {needed} bytes",
            raster.len()
        )));
    }
    let samples: Vec<u16> = if bytes_per_sample == 1 {
        raster[..needed].iter().map(|&b| u16::from(b)).collect()
    } else {
        raster[..needed]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]))
            .collect()
    };
    if let Some(s) = samples.iter().find(|&&s| usize::from(s) > maxval) {
        return Err(bad(format!("sample {s} exceeds maxval {maxval}")));
    }
    Ok(PnmImage {
        width,
        height,
        channels,
        maxval: maxval as u16,
        samples,
    })
}

impl PnmImage {
    fn normalized(&self) -> Vec<f64> {
        let scale = f64::from(self.maxval);
        self.samples.iter().map(|&s| f64::from(s) / scale).collect()
    }

    pub fn to_frame(&self) -> Result<Frame> {
        if self.channels != 1 {
            return Err(bad("expected a grayscale (P5) image"));
        }
        Frame::new(self.height, self.width, self.normalized())
    }

    pub fn to_rgb(&self) -> Result<RgbFrame> {
        RgbFrame::new(self.height, self.width, self.channels, self.normalized())
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<Frame> {
    decode_pnm(bytes)?.to_frame()
}

/// 8-bit P5.
pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend(frame.to_u8());
    out
}

/// 8-bit P6.
pub fn encode_ppm(rgb: &RgbFrame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", rgb.width(), rgb.height()).into_bytes();
    out.extend(rgb.to_u8());
    out
}

/// P4 bitmap, rows padded to whole bytes, first pixel in the high bit.
pub fn encode_pbm(height: usize, width: usize, bits: &[u8]) -> Vec<u8> {
    let mut out = format!("P4\n{width} {height}\n").into_bytes();
    for row in bits.chunks(width) {
        for chunk in row.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &b)| acc | (u8::from(b != 0) << (7 - k)));
            out.push(byte);
        }
    }
    out
}
