//! `jpegtex` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jpegtex::bench::{
    psnr, run_bench, ssim, BenchSetup, CameraPath, PathKind, DEFAULT_FRAMES, DEFAULT_REPETITIONS,
    DEFAULT_STEP_DEGREES,
};
use jpegtex::cache::DEFAULT_CAPACITY;
use jpegtex::jpeg::{assemble_blocks, parse_jpeg};
use jpegtex::mcu::{decode_mcu_with, HuffmanVariant};
use jpegtex::render::demo::{build_demo_scene, write_demo, DemoConfig};
use jpegtex::render::{Filter, RenderConfig, Scene};
use jpegtex::transcode::{
    build_mip_chain_from_jpeg, compute_overhead, deserialize_chain, serialize_chain, MipChain,
    MAX_TEXTURE_ID,
};
use jpegtex::{Error, Result, RgbImage};

#[derive(Parser)]
#[command(
    name = "jpegtex",
    version,
    about = "Random-access JPEG textures and a deferred block-decoding renderer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a baseline 4:2:0 JPEG into a random-access mip chain (.ratexm).
    Transcode(TranscodeArgs),
    /// Decode one mip level of a .ratexm to PNG or PPM.
    Decode(DecodeArgs),
    /// Render a camera path over a scene and report per-pass timings and MCU counts.
    Render(RenderArgs),
    /// PSNR and SSIM between two images.
    Metrics(MetricsArgs),
    /// Describe a .ratexm container or a JPEG.
    Info(InfoArgs),
    /// Generate the bundled demo hall (OBJ, textures, manifest) into a directory.
    Demo(DemoArgs),
}

#[derive(Args)]
struct TranscodeArgs {
    input: PathBuf,
    output: PathBuf,
    /// JPEG quality used to encode mip levels 1 and up; level 0 keeps the input scan.
    #[arg(long, default_value_t = 80, value_parser = clap::value_parser!(u8).range(1..=100))]
    quality: u8,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u16).range(0..=MAX_TEXTURE_ID as i64))]
    texture_id: u16,
    /// Print the overhead report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    mip: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Sequential)]
    variant: VariantArg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum VariantArg {
    Sequential,
    Ballot,
}

impl From<VariantArg> for HuffmanVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Sequential => HuffmanVariant::Sequential,
            VariantArg::Ballot => HuffmanVariant::Ballot,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FilterArg {
    Nearest,
    Bilinear,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PathArg {
    Rotate,
    Static,
    Orbit,
}

#[derive(Args)]
struct RenderArgs {
    /// Scene manifest (scene.json).
    scene: PathBuf,
    #[arg(long, value_enum, default_value_t = PathArg::Rotate)]
    path: PathArg,
    #[arg(long, default_value_t = DEFAULT_FRAMES)]
    frames: usize,
    /// Yaw increment per frame for the rotate path, in degrees.
    #[arg(long, default_value_t = DEFAULT_STEP_DEGREES)]
    step: f64,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    reps: usize,
    #[arg(long, value_enum, default_value_t = FilterArg::Bilinear)]
    filter: FilterArg,
    /// Render both eyes, separated by this many meters.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.064")]
    stereo: Option<f64>,
    /// Sample mip level 0 everywhere.
    #[arg(long)]
    no_mip: bool,
    #[arg(long, default_value_t = DEFAULT_CAPACITY)]
    cache_capacity: usize,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Sequential)]
    variant: VariantArg,
    /// Viewport override, e.g. 1280x720.
    #[arg(long, value_parser = parse_viewport)]
    viewport: Option<(u32, u32)>,
    /// Write the frames of the first repetition as PNGs into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the full report as JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    reference: PathBuf,
    test: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct InfoArgs {
    input: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    output: PathBuf,
    /// Edge length of every level-0 texture; a multiple of 16.
    #[arg(long, default_value_t = DemoConfig::default().texture_size)]
    texture_size: u32,
    #[arg(long, default_value_t = DemoConfig::default().quality, value_parser = clap::value_parser!(u8).range(1..=100))]
    quality: u8,
    #[arg(long, default_value_t = DemoConfig::default().seed)]
    seed: u64,
}

fn parse_viewport(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s
        .split_once('x')
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let parse = |v: &str| {
        v.parse::<u32>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("bad viewport dimension {v:?}"))
    };
    Ok((parse(w)?, parse(h)?))
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn read_chain(path: &Path) -> Result<MipChain> {
    deserialize_chain(&std::fs::read(path)?)
}

fn transcode(args: &TranscodeArgs) -> Result<()> {
    let bytes = std::fs::read(&args.input)?;
    let parsed = parse_jpeg(&bytes)?;
    let chain = build_mip_chain_from_jpeg(&parsed, args.quality, args.texture_id)?;
    std::fs::write(&args.output, serialize_chain(&chain))?;
    let report = compute_overhead(&chain.levels[0])?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!(
            "wrote {} ({} levels, texture id {})",
            args.output.display(),
            chain.levels.len(),
            args.texture_id
        );
        println!(
            "level 0: {}x{}, {} MCUs",
            parsed.width, parsed.height, report.mcu_count
        );
        println!(
            "index bits        {:>10}  ({:.3} per MCU)",
            report.index_bits,
            report.index_bits_per_mcu()
        );
        println!("DC header bits    {:>10}", report.dc_added_bits);
        println!("DC codes removed  {:>10}", report.dc_removed_bits);
        println!("padding bits      {:>10}", report.padding_bits);
        println!(
            "upper bound       {:>10.4} bpp  (index + DC header per MCU texel)",
            report.upper_bound_bpp
        );
        println!(
            "effective         {:>10.4} bpp  ({:.4} without padding)",
            report.effective_bpp, report.effective_bpp_unpadded
        );
    }
    Ok(())
}

fn decode(args: &DecodeArgs) -> Result<()> {
    let chain = read_chain(&args.input)?;
    let level = chain.levels.get(args.mip).ok_or_else(|| {
        invalid(format!(
            "mip level {} does not exist; the chain has {} levels",
            args.mip,
            chain.levels.len()
        ))
    })?;
    let blocks = (0..level.mcu_count())
        .map(|m| decode_mcu_with(level, m, args.variant.into()))
        .collect::<Result<Vec<_>>>()?;
    assemble_blocks(level.width, level.height, &blocks).save(&args.output)?;
    println!(
        "wrote {} ({}x{}, level {})",
        args.output.display(),
        level.width,
        level.height,
        args.mip
    );
    Ok(())
}

fn render(args: &RenderArgs) -> Result<()> {
    if args.frames == 0 {
        return Err(invalid("--frames must be at least 1"));
    }
    if args.reps == 0 {
        return Err(invalid("--reps must be at least 1"));
    }
    if args.cache_capacity == 0 {
        return Err(invalid("--cache-capacity must be at least 1"));
    }
    if let Some(sep) = args.stereo {
        if !(sep.is_finite() && sep >= 0.0) {
            return Err(invalid(format!(
                "--stereo separation {sep} must be a non-negative distance in meters"
            )));
        }
    }
    let scene = Scene::load(&args.scene)?;
    let mut base = scene.camera.unwrap_or_default();
    if let Some((w, h)) = args.viewport {
        base = base.with_viewport(w, h);
    }
    base.validate()?;
    let kind = match args.path {
        PathArg::Rotate => PathKind::Rotate,
        PathArg::Static => PathKind::Static,
        PathArg::Orbit => PathKind::Orbit,
    };
    let render = RenderConfig {
        filter: match args.filter {
            FilterArg::Nearest => Filter::Nearest,
            FilterArg::Bilinear => Filter::Bilinear,
        },
        no_mip: args.no_mip,
        variant: args.variant.into(),
        cache_capacity: args.cache_capacity,
        workers: args.workers,
        ..RenderConfig::default()
    };
    let setup = BenchSetup {
        scene_name: args.scene.display().to_string(),
        path: CameraPath::generate(kind, base, args.frames, args.step)?,
        step_degrees: args.step,
        repetitions: args.reps,
        stereo: args.stereo,
        render,
    };
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
    }
    let report = run_bench(&scene, &setup, |rep, vp, frame| {
        if let (Some(dir), 0) = (&args.out, rep) {
            for (eye, img) in frame.images.iter().enumerate() {
                let name = match frame.images.len() {
                    1 => format!("frame{vp:04}.png"),
                    _ => format!("frame{vp:04}_{}.png", ["left", "right"][eye.min(1)]),
                };
                img.save(dir.join(name))?;
            }
        }
        Ok(())
    })?;
    print!("{}", report.to_table());
    if let Some(path) = &args.json {
        std::fs::write(path, report.to_json()?)?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

fn metrics(args: &MetricsArgs) -> Result<()> {
    let a = RgbImage::load(&args.reference)?;
    let b = RgbImage::load(&args.test)?;
    let (p, s) = (psnr(&a, &b)?, ssim(&a, &b)?);
    if args.json {
        let psnr_value = if p.is_infinite() {
            serde_json::json!("inf")
        } else {
            serde_json::json!(p)
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({ "psnr": psnr_value, "ssim": s }))?
        );
    } else {
        println!("PSNR {} dB", fmt_db(p));
        println!("SSIM {s:.6}");
    }
    Ok(())
}

fn info(args: &InfoArgs) -> Result<()> {
    let bytes = std::fs::read(&args.input)?;
    if bytes.starts_with(&[0xFF, 0xD8]) {
        let parsed = parse_jpeg(&bytes)?;
        println!(
            "baseline JPEG {}x{}, {} MCUs ({}x{})",
            parsed.width,
            parsed.height,
            parsed.mcu_count(),
            parsed.mcu_cols(),
            parsed.mcu_rows()
        );
        return Ok(());
    }
    let chain = deserialize_chain(&bytes)?;
    println!(
        "mip chain, texture id {}, {} levels, {} bytes",
        chain.texture_id(),
        chain.levels.len(),
        bytes.len()
    );
    println!(
        "{:>5} {:>11} {:>6} {:>10} {:>8} {:>10}",
        "level", "size", "MCUs", "blob bytes", "bound", "effective"
    );
    for (k, l) in chain.levels.iter().enumerate() {
        let o = compute_overhead(l)?;
        println!(
            "{k:>5} {:>11} {:>6} {:>10} {:>8.4} {:>10.4}",
            format!("{}x{}", l.width, l.height),
            l.mcu_count(),
            l.entropy_blob.len(),
            o.upper_bound_bpp,
            o.effective_bpp
        );
    }
    Ok(())
}

fn demo(args: &DemoArgs) -> Result<()> {
    let config = DemoConfig {
        texture_size: args.texture_size,
        quality: args.quality,
        seed: args.seed,
        ..DemoConfig::default()
    };
    let scene = build_demo_scene(&config)?;
    let manifest = write_demo(&args.output, &scene)?;
    println!(
        "wrote {} ({} textures, {} triangles)",
        manifest.display(),
        scene.textures.len(),
        scene.triangle_count()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Transcode(a) => transcode(a),
        Command::Decode(a) => decode(a),
        Command::Render(a) => render(a),
        Command::Metrics(a) => metrics(a),
        Command::Info(a) => info(a),
        Command::Demo(a) => demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
