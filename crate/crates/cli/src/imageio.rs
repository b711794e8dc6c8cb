//! Reading and writing pictures: binary PGM/PPM always, PNG with the
//! `png` feature.

use std::path::Path;

use anyhow::{bail, Context, Result};
use bmvc::pnm::{decode_pnm, encode_pgm, encode_ppm};
use bmvc::{Frame, Image, RgbFrame};

pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    decode_image(&bytes).with_context(|| format!("cannot decode {}", path.display()))
}

fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        let img = decode_pnm(bytes)?;
        return Ok(if img.channels == 1 {
            Image::Gray(img.to_frame()?)
        } else {
            Image::Rgb(img.to_rgb()?)
        });
    }
    if bytes.starts_with(b"\x89PNG") {
        return decode_png(bytes);
    }
    bail!(
        "unsupported image format (expected binary PGM/PPM{})",
        png_hint()
    )
}

#[cfg(feature = "png")]
fn png_hint() -> &'static str {
    " or PNG"
}

#[cfg(not(feature = "png"))]
fn png_hint() -> &'static str {
    "; PNG needs the `png` feature"
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<Image> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let data = img
            .to_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 255.0)
            .collect();
        Ok(Image::Rgb(RgbFrame::new(h, w, 3, data)?))
    } else {
        Ok(Image::Gray(Frame::from_u8(
            h,
            w,
            &img.to_luma8().into_raw(),
        )?))
    }
}

#[cfg(not(feature = "png"))]
fn decode_png(_: &[u8]) -> Result<Image> {
    bail!("PNG input needs the `png` feature")
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

pub fn write_gray(path: &Path, frame: &Frame) -> Result<()> {
    let bytes = if is_png(path) {
        encode_png(frame.width(), frame.height(), 1, frame.to_u8())?
    } else {
        encode_pgm(frame)
    };
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_rgb(path: &Path, rgb: &RgbFrame) -> Result<()> {
    let bytes = if is_png(path) {
        encode_png(rgb.width(), rgb.height(), 3, rgb.to_u8())?
    } else {
        encode_ppm(rgb)
    };
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(feature = "png")]
fn encode_png(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Vec<u8>> {
    use image::ImageEncoder;
    let color = if channels == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out).write_image(
        &pixels,
        width as u32,
        height as u32,
        color,
    )?;
    Ok(out)
}

#[cfg(not(feature = "png"))]
fn encode_png(_: usize, _: usize, _: usize, _: Vec<u8>) -> Result<Vec<u8>> {
    bail!("PNG output needs the `png` feature")
}

/// `out.pgm` -> `out_003.pgm` when a stream holds several frames.
pub fn numbered(path: &Path, index: usize, count: usize) -> std::path::PathBuf {
    if count <= 1 {
        return path.to_path_buf();
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{index:03}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{index:03}"),
    };
    path.with_file_name(name)
}
