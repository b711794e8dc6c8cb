use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bmvc::{read_stream, CodecId};

fn bmvc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bmvc"))
}

fn run(args: &[&str]) -> Output {
    let out = bmvc().args(args).output().expect("spawn bmvc");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Smooth test picture with some edges, written as an 8-bit PGM.
fn write_pgm(path: &Path, h: usize, w: usize, phase: f64) {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for r in 0..h {
        for c in 0..w {
            let (y, x) = (r as f64 / h as f64, c as f64 / w as f64);
            let mut v = 0.5 + 0.3 * (6.0 * x + phase).sin() * (4.0 * y).cos();
            if (x - 0.5).abs() < 0.2 && (y - 0.4).abs() < 0.15 {
                v = 0.9;
            }
            bytes.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    std::fs::write(path, bytes).unwrap();
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn hd_frame_with_270x320_blocks_is_cr_24() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("hd.pgm");
    let out = dir.path().join("hd.bmvc");
    write_pgm(&img, 1080, 1920, 0.0);
    let o = run(&[
        "encode",
        "-i",
        s(&img),
        "-o",
        s(&out),
        "--block",
        "270x320",
        "--gray",
        "--stats",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("multiplications: 0"));
    let stream = read_stream(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(stream.header.codec, CodecId::Bmvc);
    assert_eq!(stream.header.compression_ratio().unwrap(), 24);
    assert_eq!(stream.frames[0].luma.len(), 270 * 320);
}

#[test]
fn single_block_stream_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("a.pgm");
    let enc = dir.path().join("a.bmvc");
    let dec = dir.path().join("a_out.pgm");
    write_pgm(&img, 48, 64, 0.3);
    assert!(run(&[
        "encode",
        "-i",
        s(&img),
        "-o",
        s(&enc),
        "--cr",
        "1",
        "--bits",
        "16"
    ])
    .status
    .success());
    let o = run(&[
        "decode",
        "-i",
        s(&enc),
        "-o",
        s(&dec),
        "--reference",
        s(&img),
    ]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    let db: f64 = text
        .split("PSNR ")
        .nth(1)
        .unwrap()
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(db >= 48.0, "{text}");
    assert_eq!(std::fs::read(&dec).unwrap(), std::fs::read(&img).unwrap());
}

#[test]
fn block_that_does_not_tile_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("a.pgm");
    let enc = dir.path().join("a.bmvc");
    write_pgm(&img, 30, 30, 0.0);
    let o = run(&["encode", "-i", s(&img), "-o", s(&enc), "--block", "7x7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!enc.exists());
    let o = run(&["encode", "-i", s(&img), "-o", s(&enc)]);
    assert_eq!(o.status.code(), Some(2), "block or cr is required");
}

#[test]
fn identity_decode_is_measurement_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("a.pgm");
    let enc = dir.path().join("a.bmvc");
    let trace = dir.path().join("trace.csv");
    write_pgm(&img, 32, 32, 1.0);
    assert!(run(&["encode", "-i", s(&img), "-o", s(&enc), "--cr", "4"])
        .status
        .success());
    let o = run(&[
        "decode",
        "-i",
        s(&enc),
        "-o",
        s(&dir.path().join("o.pgm")),
        "--denoiser",
        "identity",
        "--iters",
        "1",
        "--trace",
        s(&trace),
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&trace);
    assert_eq!(rows.len(), 1);
    let residual: f64 = rows[0][2].parse().unwrap();
    assert!(residual < 1e-9, "{residual}");
}

#[test]
fn explicit_schedule_matches_default() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("a.pgm");
    let enc = dir.path().join("a.bmvc");
    write_pgm(&img, 32, 32, 2.0);
    assert!(run(&["encode", "-i", s(&img), "-o", s(&enc), "--cr", "4"])
        .status
        .success());
    let decode = |name: &str, extra: &[&str]| -> PathBuf {
        let trace = dir.path().join(name);
        let dec = dir.path().join("o.pgm");
        let mut args = vec!["decode", "-i", s(&enc), "-o", s(&dec), "--trace", s(&trace)];
        args.extend_from_slice(extra);
        assert!(run(&args).status.success());
        trace
    };
    let a = decode("default.csv", &[]);
    let b = decode("explicit.csv", &["--schedule", "20x20,10x20,5x20"]);
    let rows = csv_rows(&a);
    assert_eq!(rows.len(), 60);
    assert_eq!(rows, csv_rows(&b));
    let sigmas: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert!(sigmas[..20].iter().all(|&x| x == "20") && sigmas[40..].iter().all(|&x| x == "5"));
}

#[test]
fn bench_rejects_empty_codec_list() {
    let dir = tempfile::tempdir().unwrap();
    write_pgm(&dir.path().join("a.pgm"), 24, 24, 0.0);
    let o = run(&[
        "bench",
        "--images",
        s(dir.path()),
        "--out",
        s(&dir.path().join("o")),
        "--codecs",
        ",",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images");
    std::fs::create_dir(&images).unwrap();
    write_pgm(&images.join("one.pgm"), 48, 48, 0.0);
    write_pgm(&images.join("two.pgm"), 48, 48, 1.7);
    let out = dir.path().join("report");
    let o = run(&[
        "bench",
        "--images",
        s(&images),
        "--out",
        s(&out),
        "--codecs",
        "bmvc,random-ds,block-cs",
        "--cr",
        "4,16",
        "--bits",
        "8,12",
        "--iters",
        "15",
    ]);
    assert!(o.status.success());
    for f in [
        "results.csv",
        "manifest.json",
        "psnr_vs_cr.svg",
        "psnr_vs_bits.svg",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["images"].as_array().unwrap().len(), 2);

    let rows = csv_rows(&out.join("results.csv"));
    assert_eq!(rows.len(), 2 * 3 * 2 * 2);
    let psnr = |codec: &str, cr: &str, bits: &str| -> f64 {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r[1] == codec && r[2] == cr && r[3] == bits)
            .map(|r| r[10].parse().unwrap())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    for cr in ["4", "16"] {
        assert!((psnr("bmvc", cr, "8") - psnr("bmvc", cr, "12")).abs() <= 0.5);
    }
    for codec in ["bmvc", "random-ds", "block-cs"] {
        assert!(psnr(codec, "4", "8") >= psnr(codec, "16", "8"), "{codec}");
    }
    // no multiplications in the BMVC encoder
    assert!(rows.iter().filter(|r| r[1] == "bmvc").all(|r| r[13] == "0"));
}
