//! `bmvc` command-line tool: encode, decode and benchmark.
//!
//! Exit codes: 0 success, 1 data or runtime error, 2 usage error.

mod bench;
mod imageio;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use bmvc::codec::stream_mask;
use bmvc::pnp::trace_to_csv;
use bmvc::{
    psnr, read_stream, ssim, BlockGeometry, CodecId, DecodeConfig, DenoiserKind, Frame, Image,
    OpCounts, StreamCodec, StreamHeader,
};
use clap::{ArgAction, Args, Parser, Subcommand};

use crate::imageio::{numbered, read_image, write_gray, write_rgb};

#[derive(Parser)]
#[command(name = "bmvc", version, about = "Block modulating video compression")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode one or more same-sized images into a .bmvc stream.
    Encode(EncodeArgs),
    /// Decode a .bmvc stream back into images.
    Decode(DecodeArgs),
    /// Run a codec x compression-ratio x bit-depth grid over a folder of images.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("shape").required(true).args(["block", "cr"])))]
struct EncodeArgs {
    /// Input image (PGM/PPM, PNG with the `png` feature); repeat for several frames.
    #[arg(short, long = "input", required = true, action = ArgAction::Append)]
    inputs: Vec<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
    /// Block size HxW; must tile the frame. Cr = number of blocks.
    #[arg(long, value_parser = parse_dims)]
    block: Option<(usize, usize)>,
    /// Compression ratio; picks the most square block grid with this many blocks.
    #[arg(long)]
    cr: Option<usize>,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u8).range(8..=16))]
    bits: u8,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "bmvc", value_parser = parse_codec)]
    codec: CodecId,
    /// Chroma decimation per dimension for color input.
    #[arg(long, default_value_t = bmvc::color::DEFAULT_CHROMA_FACTOR)]
    chroma_factor: usize,
    /// Code color input as luma only.
    #[arg(long)]
    gray: bool,
    /// Print operation counts and compressed size.
    #[arg(long)]
    stats: bool,
    /// Also write the BMVC mask as a PBM image.
    #[arg(long)]
    export_mask: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScheduleArgs {
    /// Denoiser used inside the decoder: tv, nlm or identity.
    #[arg(long, default_value = "tv", value_parser = parse_denoiser)]
    pub denoiser: DenoiserKind,
    /// Total iterations, spread over the default sigma levels.
    #[arg(long, conflicts_with = "schedule")]
    pub iters: Option<usize>,
    /// Explicit schedule as SIGMAxITERATIONS stages, e.g. 20x20,10x20,5x20.
    #[arg(long)]
    pub schedule: Option<String>,
}

impl ScheduleArgs {
    pub fn config(&self) -> Result<DecodeConfig, Failure> {
        let cfg = match (&self.schedule, self.iters) {
            (Some(text), _) => DecodeConfig::new(
                DecodeConfig::parse_schedule(text).map_err(usage)?,
                self.denoiser,
            ),
            (None, Some(n)) => DecodeConfig::with_total_iterations(n, self.denoiser),
            (None, None) => Ok(DecodeConfig::default().with_denoiser(self.denoiser)),
        };
        cfg.map_err(usage)
    }
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Output image; frames of multi-frame streams get a _NNN suffix.
    #[arg(short, long)]
    output: PathBuf,
    /// Original image(s) to score against, one per frame.
    #[arg(long = "reference", action = ArgAction::Append)]
    references: Vec<PathBuf>,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    schedule: ScheduleArgs,
}

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

pub fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got '{s}'"))?;
    let h: usize = h
        .trim()
        .parse()
        .map_err(|_| format!("bad height in '{s}'"))?;
    let w: usize = w
        .trim()
        .parse()
        .map_err(|_| format!("bad width in '{s}'"))?;
    if h == 0 || w == 0 {
        return Err(format!("zero dimension in '{s}'"));
    }
    Ok((h, w))
}

fn parse_codec(s: &str) -> Result<CodecId, String> {
    s.parse().map_err(|e: bmvc::Error| e.to_string())
}

fn parse_denoiser(s: &str) -> Result<DenoiserKind, String> {
    s.parse().map_err(|e: bmvc::Error| e.to_string())
}

fn geometry(
    h: usize,
    w: usize,
    block: Option<(usize, usize)>,
    cr: Option<usize>,
) -> anyhow::Result<BlockGeometry> {
    match (block, cr) {
        (Some((bh, bw)), _) => Ok(BlockGeometry::new(h, w, bh, bw)?),
        (None, Some(cr)) => Ok(BlockGeometry::with_block_count(h, w, cr)?),
        (None, None) => bail!("either --block or --cr is required"),
    }
}

fn encode(args: &EncodeArgs) -> Result<(), Failure> {
    let mut images = args
        .inputs
        .iter()
        .map(|p| read_image(p))
        .collect::<anyhow::Result<Vec<Image>>>()?;
    if args.gray {
        images = images.iter().map(|img| Image::Gray(img.luma())).collect();
    }
    let (h, w) = images[0].dims();
    let color = matches!(images[0], Image::Rgb(_));
    for (img, path) in images.iter().zip(&args.inputs) {
        if img.dims() != (h, w) || matches!(img, Image::Rgb(_)) != color {
            return Err(anyhow!(
                "{} does not match the first input ({h}x{w}, {})",
                path.display(),
                if color { "color" } else { "gray" }
            )
            .into());
        }
    }
    let geom = geometry(h, w, args.block, args.cr)?;
    let mut header = StreamHeader::new(args.codec, &geom, args.seed, args.bits)?;
    if color {
        header = header.with_chroma(args.chroma_factor)?;
    }
    let codec = if args.stats {
        StreamCodec::instrumented(&header)?
    } else {
        StreamCodec::new(&header)?
    };

    let mut payloads = Vec::with_capacity(images.len());
    let mut total = OpCounts::default();
    for img in &images {
        let (payload, ops) = codec.encode(img)?;
        if let Some(ops) = ops {
            total.additions += ops.additions;
            total.multiplications += ops.multiplications;
        }
        payloads.push(payload);
    }
    let bytes = codec.write(&payloads)?;
    std::fs::write(&args.output, &bytes)
        .with_context(|| format!("cannot write {}", args.output.display()))?;

    if let Some(path) = &args.export_mask {
        if args.codec != CodecId::Bmvc {
            return Err(anyhow!("--export-mask only applies to the bmvc codec").into());
        }
        std::fs::write(path, stream_mask(args.seed, &geom)?.to_pbm())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if args.stats {
        let luma_codes = header.luma_codes_per_frame()?;
        println!("codec: {}", args.codec);
        println!(
            "frame: {h}x{w}, block: {}x{}, Cr: {}",
            geom.block_height(),
            geom.block_width(),
            geom.compression_ratio()
        );
        println!("frames: {}", payloads.len());
        println!("bits: {}, seed: {}", args.bits, args.seed);
        if codec.effective_seed() != args.seed {
            println!(
                "sensing matrix seed (after resampling): {}",
                codec.effective_seed()
            );
        }
        println!("luma codes per frame: {luma_codes}");
        println!("additions: {}", total.additions);
        println!("multiplications: {}", total.multiplications);
        println!("compressed size: {} bytes", bytes.len());
    }
    Ok(())
}

fn reference_luma(path: &Path) -> anyhow::Result<Frame> {
    Ok(read_image(path)?.luma())
}

fn decode(args: &DecodeArgs) -> Result<(), Failure> {
    let cfg = args.schedule.config()?;
    let bytes = std::fs::read(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let stream =
        read_stream(&bytes).with_context(|| format!("cannot parse {}", args.input.display()))?;
    let count = stream.frames.len();
    if !args.references.is_empty() && args.references.len() != count {
        return Err(usage(format!(
            "{} reference image(s) given for a {count}-frame stream",
            args.references.len()
        )));
    }
    let codec = StreamCodec::new(&stream.header)?;
    let gray_output = args
        .output
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    for (k, payload) in stream.frames.iter().enumerate() {
        let reference = args
            .references
            .get(k)
            .map(|p| reference_luma(p))
            .transpose()?;
        let out = codec.decode(payload, &cfg, reference.as_ref())?;
        let path = numbered(&args.output, k, count);
        match &out.rgb {
            Some(rgb) if !gray_output => write_rgb(&path, rgb)?,
            _ => write_gray(&path, &out.luma.frame)?,
        }
        if let Some(trace) = &args.trace {
            let trace_path = numbered(trace, k, count);
            std::fs::write(&trace_path, trace_to_csv(&out.luma.trace))
                .with_context(|| format!("cannot write {}", trace_path.display()))?;
        }
        if let Some(r) = &reference {
            let p = psnr(r, &out.luma.frame)?;
            let s =
                ssim(r, &out.luma.frame).map_or_else(|_| "n/a".to_string(), |s| format!("{s:.4}"));
            println!("frame {k}: PSNR {p:.2} dB, SSIM {s}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("270x320"), Ok((270, 320)));
        assert_eq!(parse_dims("8X4"), Ok((8, 4)));
        assert!(parse_dims("270").is_err());
        assert!(parse_dims("0x4").is_err());
        assert!(parse_dims("ax4").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn schedule_flags() {
        let s = ScheduleArgs {
            denoiser: DenoiserKind::Identity,
            iters: Some(1),
            schedule: None,
        };
        assert_eq!(s.config().unwrap().iterations(), 1);
        let s = ScheduleArgs {
            denoiser: DenoiserKind::Tv,
            iters: None,
            schedule: Some("20x20,10x20,5x20".into()),
        };
        assert_eq!(s.config().unwrap(), DecodeConfig::default());
        let s = ScheduleArgs {
            denoiser: DenoiserKind::Tv,
            iters: None,
            schedule: Some("20".into()),
        };
        assert!(matches!(s.config(), Err(Failure::Usage(_))));
    }
}
