//! Command-line front end: `vectorize`, `eval`, `sweep` and `fixture`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use vecraster::raster_eval::{fmt_psnr, parse_svg, fill_paths, DEFAULT_SUPERSAMPLE};
use vecraster::raster_io::{load_image, save_image};
use vecraster::{fixtures, psnr, vectorize, EvalReport, GainKind, PipelineConfig, RasterImage};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

pub const THREADS_ENV: &str = "VECRASTER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "vecraster", version, about = "Vectorize raster images into piecewise-constant SVG")]
struct Cli {
    /// Worker threads; falls back to VECRASTER_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Vectorize an image into an SVG file.
    Vectorize(VectorizeArgs),
    /// Rasterize an SVG and compare it against a reference image.
    Eval(EvalArgs),
    /// Vectorize at several target region counts and tabulate PSNR.
    Sweep(SweepArgs),
    /// Write a built-in test image.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Merging gain: area, bg, scale, scale-max or ms.
    #[arg(long, default_value = "area")]
    gain: GainKind,
    /// Smoothing time T* spread over the iterations.
    #[arg(long, default_value_t = 1.0)]
    smooth: f64,
    /// Bézier fitting tolerance in pixels.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Number of merge/smooth iterations.
    #[arg(long, default_value_t = 3)]
    iters: usize,
    /// Merge on a 3x3 box-filtered copy of the image.
    #[arg(long)]
    prefilter: bool,
}

impl PipelineArgs {
    fn config(&self, target_regions: usize) -> PipelineConfig {
        PipelineConfig {
            gain: self.gain,
            target_regions,
            smooth_time: self.smooth,
            tau: self.tau,
            iterations: self.iters,
            prefilter: self.prefilter,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct VectorizeArgs {
    /// Input image (PNG, PGM or PPM).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Target region count N*.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    regions: u64,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Per-stage metrics CSV.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Per-merge trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// SVG produced by `vectorize`.
    #[arg(long)]
    svg: PathBuf,
    /// Reference image.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Report CSV; printed to standard output when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Input image (PNG, PGM or PPM).
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated target region counts.
    #[arg(long, value_delimiter = ',', default_value = "25,50,100,200",
          value_parser = clap::value_parser!(u64).range(1..))]
    regions: Vec<u64>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output directory for `sweep.csv` and one SVG per count.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FixtureArgs {
    /// Fixture name: fig3, gradient or disk.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(fixtures::FIXTURE_NAMES))]
    name: String,
    /// Output path; PNG when it ends in .png, PGM/PPM otherwise.
    #[arg(long)]
    out: PathBuf,
}

/// Parse `argv` (including the program name), run the command and return
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match pool.install(|| execute(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?,
            Err(_) => return Ok(None),
        },
    };
    if n == 0 {
        return Err("thread count must be at least 1".into());
    }
    Ok(Some(n))
}

fn execute(command: Command) -> Result<(), String> {
    match command {
        Command::Vectorize(a) => cmd_vectorize(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fixture(a) => cmd_fixture(a),
    }
}

fn load(path: &Path) -> Result<RasterImage, String> {
    load_image(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_vectorize(a: VectorizeArgs) -> Result<(), String> {
    let img = load(&a.input)?;
    let cfg = a.pipeline.config(a.regions as usize);
    let out = vectorize(&img, &cfg).map_err(|e| e.to_string())?;
    write(&a.out, out.document.to_svg())?;
    if let Some(path) = &a.metrics {
        write(path, out.trace.metrics_csv())?;
    }
    if let Some(path) = &a.trace {
        write(path, out.trace.trace_csv())?;
    }
    eprintln!(
        "{}: {} regions, {} path segments, lambda* {:.4}",
        a.out.display(),
        out.document.shapes.len(),
        out.document.segment_count(),
        out.lambda_star
    );
    Ok(())
}

/// Rasterize an SVG file at the reference's size and channel count.
pub fn evaluate_svg(svg_text: &str, reference: &RasterImage) -> Result<EvalReport, String> {
    let svg = parse_svg(svg_text).map_err(|e| e.to_string())?;
    if (svg.width, svg.height) != (reference.width, reference.height) {
        return Err(format!(
            "SVG canvas {}x{} does not match reference {}x{}",
            svg.width, svg.height, reference.width, reference.height
        ));
    }
    let rendered = fill_paths(svg.width, svg.height, reference.channels, &svg.shapes, DEFAULT_SUPERSAMPLE);
    Ok(EvalReport {
        psnr: psnr(&rendered.image, reference).map_err(|e| e.to_string())?,
        region_count: svg.shapes.len(),
        path_segment_count: svg.segment_count,
        unfilled_pixels: rendered.unfilled_pixels,
    })
}

fn cmd_eval(a: EvalArgs) -> Result<(), String> {
    let text = fs::read_to_string(&a.svg).map_err(|e| format!("{}: {e}", a.svg.display()))?;
    let reference = load(&a.reference)?;
    let report = evaluate_svg(&text, &reference)?;
    let csv = format!("{}\n{}\n", EvalReport::CSV_HEADER, report.csv_row());
    match &a.report {
        Some(path) => {
            write(path, csv)?;
            eprintln!("{report}");
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), String> {
    let img = load(&a.input)?;
    fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let mut csv = String::from("target_regions,region_count,psnr\n");
    for &n in &a.regions {
        let cfg = PipelineConfig { evaluate_output: false, ..a.pipeline.config(n as usize) };
        let out = vectorize(&img, &cfg).map_err(|e| format!("N*={n}: {e}"))?;
        let svg = out.document.to_svg();
        write(&a.out.join(format!("n{n}.svg")), &svg)?;
        let report = evaluate_svg(&svg, &img)?;
        writeln!(csv, "{n},{},{}", report.region_count, fmt_psnr(report.psnr)).unwrap();
        eprintln!("N*={n}: {report}");
    }
    write(&a.out.join("sweep.csv"), csv)
}

fn cmd_fixture(a: FixtureArgs) -> Result<(), String> {
    let f = fixtures::fixture(&a.name).ok_or_else(|| format!("unknown fixture '{}'", a.name))?;
    save_image(&f.image, &a.out).map_err(|e| format!("{}: {e}", a.out.display()))
}
