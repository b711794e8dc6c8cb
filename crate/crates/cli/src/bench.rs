//! Benchmark harness: every (image, codec, Cr, bits) cell is encoded,
//! serialized, parsed back and decoded; results go to a CSV, a manifest
//! and two SVG charts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use bmvc::denoiser::{TV_ITERATIONS, TV_LAMBDA_PER_SIGMA};
use bmvc::{
    psnr, read_stream, ssim, BlockGeometry, CodecId, DecodeConfig, Frame, Image, StreamCodec,
    StreamHeader,
};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use crate::imageio::read_image;
use crate::svg::{line_chart, Chart, Series};
use crate::{usage, Failure, ScheduleArgs};

#[derive(Args)]
pub struct BenchArgs {
    /// Folder of test images (PGM/PPM, PNG with the `png` feature); color images are scored on luma.
    #[arg(long)]
    images: PathBuf,
    /// Comma-separated codecs: bmvc, random-ds, block-cs.
    #[arg(long, default_value = "bmvc,random-ds")]
    codecs: String,
    /// Comma-separated compression ratios.
    #[arg(long, default_value = "4,16,32,64", value_delimiter = ',')]
    cr: Vec<usize>,
    /// Comma-separated bit depths (8..=16).
    #[arg(long, default_value = "8", value_delimiter = ',')]
    bits: Vec<u8>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Center-crop every image to NxN first (block CS needs sides divisible by 24).
    #[arg(long)]
    crop: Option<usize>,
    /// Output folder for results.csv, manifest.json and the charts.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    schedule: ScheduleArgs,
}

/// One CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    image: String,
    codec: String,
    cr: usize,
    bits: u8,
    height: usize,
    width: usize,
    block_height: usize,
    block_width: usize,
    codes: usize,
    stream_bytes: usize,
    psnr_db: f64,
    ssim: f64,
    encode_additions: u64,
    encode_multiplications: u64,
    encode_ms: f64,
    decode_ms: f64,
    iterations: usize,
    seed: u64,
    effective_seed: u64,
}

#[derive(Serialize)]
struct ImageEntry {
    name: String,
    path: String,
    height: usize,
    width: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: Vec<String>,
    seed: u64,
    codecs: Vec<CodecId>,
    compression_ratios: &'a [usize],
    bits: &'a [u8],
    crop: Option<usize>,
    decode: &'a DecodeConfig,
    tv_lambda_per_sigma: f64,
    tv_iterations: usize,
    images: Vec<ImageEntry>,
    /// Block CS seeds actually used, per (image size, Cr), when resampling moved them.
    resampled_seeds: BTreeMap<String, u64>,
}

fn parse_codecs(text: &str) -> Result<Vec<CodecId>, Failure> {
    let mut codecs = Vec::new();
    for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let c: CodecId = name.parse().map_err(usage)?;
        if !codecs.contains(&c) {
            codecs.push(c);
        }
    }
    if codecs.is_empty() {
        return Err(usage("empty codec list"));
    }
    Ok(codecs)
}

fn list_images(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| {
                let e = e.to_ascii_lowercase();
                e == "pgm" || e == "ppm" || (cfg!(feature = "png") && e == "png")
            })
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(anyhow!("no test images in {}", dir.display()));
    }
    Ok(paths)
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn center_crop(frame: &Frame, size: usize) -> anyhow::Result<Frame> {
    let (h, w) = frame.dims();
    if size > h || size > w {
        return Err(anyhow!("cannot crop {h}x{w} to {size}x{size}"));
    }
    Ok(frame.crop((h - size) / 2, (w - size) / 2, size, size)?)
}

struct Cell<'a> {
    name: &'a str,
    frame: &'a Frame,
    codec: CodecId,
    cr: usize,
    bits: u8,
}

fn run_cell(cell: &Cell, seed: u64, cfg: &DecodeConfig) -> anyhow::Result<Row> {
    let (h, w) = cell.frame.dims();
    let context = || {
        format!(
            "{} / {} / Cr {} / {} bits",
            cell.name, cell.codec, cell.cr, cell.bits
        )
    };
    let geom = BlockGeometry::with_block_count(h, w, cell.cr).with_context(context)?;
    let header = StreamHeader::new(cell.codec, &geom, seed, cell.bits).with_context(context)?;
    let codec = StreamCodec::instrumented(&header).with_context(context)?;

    let start = Instant::now();
    let (payload, ops) = codec.encode(&Image::Gray(cell.frame.clone()))?;
    let encode_ms = start.elapsed().as_secs_f64() * 1e3;
    let ops = ops.unwrap_or_default();
    let bytes = codec.write(std::slice::from_ref(&payload))?;

    let start = Instant::now();
    let stream = read_stream(&bytes)?;
    let out = codec.decode_luma(&stream.frames[0].luma, cfg, None)?;
    let decode_ms = start.elapsed().as_secs_f64() * 1e3;

    Ok(Row {
        image: cell.name.to_string(),
        codec: cell.codec.to_string(),
        cr: cell.cr,
        bits: cell.bits,
        height: h,
        width: w,
        block_height: geom.block_height(),
        block_width: geom.block_width(),
        codes: payload.luma.len(),
        stream_bytes: bytes.len(),
        psnr_db: psnr(cell.frame, &out.frame)?,
        ssim: ssim(cell.frame, &out.frame).unwrap_or(f64::NAN),
        encode_additions: ops.additions,
        encode_multiplications: ops.multiplications,
        encode_ms,
        decode_ms,
        iterations: out.trace.len(),
        seed,
        effective_seed: codec.effective_seed(),
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean PSNR per (codec, x), where x is picked from each row.
fn mean_psnr_by(rows: &[Row], x: impl Fn(&Row) -> f64) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut groups: BTreeMap<String, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(r.codec.clone())
            .or_default()
            .entry(x(r).to_bits())
            .or_default()
            .push(r.psnr_db);
    }
    groups
        .into_iter()
        .map(|(codec, by_x)| {
            let mut pts: Vec<(f64, f64)> = by_x
                .into_iter()
                .map(|(k, v)| (f64::from_bits(k), mean(&v)))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (codec, pts)
        })
        .collect()
}

fn write_charts(out: &Path, rows: &[Row], bits: &[u8], crs: &[usize]) -> anyhow::Result<()> {
    let base_bits = bits[0];
    let at_bits: Vec<Row> = rows
        .iter()
        .filter(|r| r.bits == base_bits)
        .cloned()
        .collect();
    let series = |m: BTreeMap<String, Vec<(f64, f64)>>| -> Vec<Series> {
        m.into_iter()
            .map(|(name, points)| Series { name, points })
            .collect()
    };
    let title = format!("Mean PSNR vs compression ratio ({base_bits}-bit)");
    let svg = line_chart(
        &Chart {
            title: &title,
            x_label: "compression ratio",
            y_label: "PSNR (dB)",
            log2_x: true,
        },
        &series(mean_psnr_by(&at_bits, |r| r.cr as f64)),
    );
    std::fs::write(out.join("psnr_vs_cr.svg"), svg)?;

    let base_cr = crs[0];
    let at_cr: Vec<Row> = rows.iter().filter(|r| r.cr == base_cr).cloned().collect();
    let title = format!("Mean PSNR vs quantization bits (Cr {base_cr})");
    let svg = line_chart(
        &Chart {
            title: &title,
            x_label: "bits per code",
            y_label: "PSNR (dB)",
            log2_x: false,
        },
        &series(mean_psnr_by(&at_cr, |r| f64::from(r.bits))),
    );
    std::fs::write(out.join("psnr_vs_bits.svg"), svg)?;
    Ok(())
}

pub fn run(args: &BenchArgs) -> Result<(), Failure> {
    let codecs = parse_codecs(&args.codecs)?;
    if args.cr.is_empty() || args.cr.contains(&0) {
        return Err(usage("compression ratios must be positive"));
    }
    if args.bits.is_empty() || args.bits.iter().any(|b| !(8..=16).contains(b)) {
        return Err(usage("bits must be in 8..=16"));
    }
    let cfg = args.schedule.config()?;

    let paths = list_images(&args.images)?;
    let mut images = Vec::with_capacity(paths.len());
    let mut entries = Vec::with_capacity(paths.len());
    for p in &paths {
        let bytes = std::fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
        let mut frame = read_image(p)?.luma();
        if let Some(size) = args.crop {
            frame = center_crop(&frame, size).with_context(|| p.display().to_string())?;
        }
        let name = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        entries.push(ImageEntry {
            name: name.clone(),
            path: p.display().to_string(),
            height: frame.height(),
            width: frame.width(),
            sha256: sha256_hex(&bytes),
        });
        images.push((name, frame));
    }

    let mut cells = Vec::new();
    for (name, frame) in &images {
        for &codec in &codecs {
            for &cr in &args.cr {
                for &bits in &args.bits {
                    cells.push(Cell {
                        name,
                        frame,
                        codec,
                        cr,
                        bits,
                    });
                }
            }
        }
    }
    log::info!("bench: {} cells", cells.len());
    let rows = cells
        .par_iter()
        .map(|c| run_cell(c, args.seed, &cfg))
        .collect::<anyhow::Result<Vec<Row>>>()?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let csv_path = args.out.join("results.csv");
    let mut writer = csv::Writer::from_path(&csv_path)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    for r in &rows {
        writer.serialize(r)?;
    }
    writer.flush()?;

    let resampled_seeds = rows
        .iter()
        .filter(|r| r.effective_seed != r.seed)
        .map(|r| {
            (
                format!("{}x{}/cr{}", r.height, r.width, r.cr),
                r.effective_seed,
            )
        })
        .collect();
    let manifest = Manifest {
        tool: "bmvc-cli",
        version: env!("CARGO_PKG_VERSION"),
        command: std::env::args().collect(),
        seed: args.seed,
        codecs: codecs.clone(),
        compression_ratios: &args.cr,
        bits: &args.bits,
        crop: args.crop,
        decode: &cfg,
        tv_lambda_per_sigma: TV_LAMBDA_PER_SIGMA,
        tv_iterations: TV_ITERATIONS,
        images: entries,
        resampled_seeds,
    };
    std::fs::write(
        args.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    write_charts(&args.out, &rows, &args.bits, &args.cr)?;

    println!(
        "{:<10} {:>5} {:>5} {:>10} {:>8}",
        "codec", "cr", "bits", "mean PSNR", "mean SSIM"
    );
    for &codec in &codecs {
        for &cr in &args.cr {
            for &bits in &args.bits {
                let sel: Vec<&Row> = rows
                    .iter()
                    .filter(|r| r.codec == codec.to_string() && r.cr == cr && r.bits == bits)
                    .collect();
                let p: Vec<f64> = sel.iter().map(|r| r.psnr_db).collect();
                let s: Vec<f64> = sel.iter().map(|r| r.ssim).collect();
                println!(
                    "{:<10} {cr:>5} {bits:>5} {:>10.2} {:>8.4}",
                    codec.to_string(),
                    mean(&p),
                    mean(&s)
                );
            }
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
