use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mns_core::metrics::format_psnr;
use mns_core::{
    decode, encode_full_search, encode_quadtree, load_pgm, mse, psnr, rd_sweep, read_stream, save_pgm, write_rd_csv,
    write_stream, DecodeConfig, EncoderConfig, GrayImage, Mode, OffsetHistogram, SweepGrid,
};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Pgm { path: PathBuf, source: mns_core::PgmError },
    #[error("{}: {source}", path.display())]
    Stream {
        path: PathBuf,
        source: mns_core::StreamError,
    },
    #[error(transparent)]
    Codec(#[from] mns_core::Error),
    #[error(transparent)]
    Geometry(#[from] mns_core::GeometryError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 3,
            _ => 4,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "mns",
    version,
    about = "Quadtree fractal image codec for 8-bit grayscale PGM files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a PGM image into an .mns stream
    Encode(EncodeArgs),
    /// Reconstruct a PGM image from an .mns stream
    Decode(DecodeArgs),
    /// Print MSE and PSNR between two PGM images
    Metrics(MetricsArgs),
    /// Benchmarks
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Search-based analyses
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Rate-distortion sweep over modes and thresholds, written as CSV
    Rd(RdArgs),
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Histogram of full-search domain offsets relative to each range block
    Offsets(OffsetsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CodecMode {
    Ns,
    Mns,
}

impl From<CodecMode> for Mode {
    fn from(m: CodecMode) -> Mode {
        match m {
            CodecMode::Ns => Mode::NoSearch,
            CodecMode::Mns => Mode::Mns,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SwitchSet {
    On,
    Off,
    Both,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long = "in", value_name = "PGM")]
    input: PathBuf,
    #[arg(long = "out", value_name = "MNS")]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "mns")]
    mode: CodecMode,
    /// RMS threshold for 16x16 blocks
    #[arg(long, default_value_t = 8.0, value_parser = non_negative)]
    e1: f64,
    /// RMS threshold for 8x8 blocks
    #[arg(long, default_value_t = 8.0, value_parser = non_negative)]
    e2: f64,
    /// RMS threshold for 4x4 blocks
    #[arg(long, default_value_t = 8.0, value_parser = non_negative)]
    e3: f64,
    /// Largest allowed spread between a block's quadrant means for sub-block coding
    #[arg(long, default_value_t = 16.0, value_parser = non_negative)]
    tmean: f64,
    /// Share one level id among the four 2x2 leaves of a split
    #[arg(long, value_enum, default_value = "on")]
    technique2: Switch,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long = "in", value_name = "MNS")]
    input: PathBuf,
    #[arg(long = "out", value_name = "PGM")]
    output: PathBuf,
    /// Maximum number of iterations
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Stop once no pixel moves by this much or more in one iteration
    #[arg(long, default_value_t = 0.5, value_parser = non_negative)]
    stop_delta: f64,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long, value_name = "PGM")]
    a: PathBuf,
    #[arg(long, value_name = "PGM")]
    b: PathBuf,
}

#[derive(Args)]
struct RdArgs {
    #[arg(long = "in", value_name = "PGM")]
    input: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ns,mns")]
    modes: Vec<CodecMode>,
    /// Thresholds applied uniformly to levels 1 to 3, one sweep point each
    #[arg(long = "e-grid", value_delimiter = ',', default_value = "4,6,8,12", value_parser = non_negative)]
    e_grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "on")]
    technique2: SwitchSet,
    #[arg(long, default_value_t = 16.0, value_parser = non_negative)]
    tmean: f64,
    #[arg(long, value_name = "CSV")]
    csv: PathBuf,
}

#[derive(Args)]
struct OffsetsArgs {
    #[arg(long = "in", value_name = "PGM")]
    input: PathBuf,
    #[arg(long, default_value_t = 8)]
    range_size: usize,
    /// Spacing of the domain lattice in pixels
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    stride: u16,
    /// Marginal histogram; the joint table goes next to it as `<stem>_joint.csv`
    #[arg(long, value_name = "CSV")]
    csv: PathBuf,
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a finite non-negative number, got {s}"))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn read_pgm(path: &Path) -> Result<GrayImage> {
    load_pgm(&read_file(path)?).map_err(|source| CliError::Pgm {
        path: path.to_owned(),
        source,
    })
}

/// Writes through a temporary file in the target directory so a failed run
/// never leaves a partial output behind.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let io_err = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    fill(tmp.as_file_mut()).map_err(io_err)?;
    tmp.as_file_mut().flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn run_encode(args: EncodeArgs) -> Result<()> {
    let img = read_pgm(&args.input)?;
    let cfg = EncoderConfig {
        thresholds: [args.e1, args.e2, args.e3],
        mean_tol: args.tmean,
        mode: args.mode.into(),
        technique2: args.technique2 == Switch::On,
        ..EncoderConfig::default()
    };
    let code = encode_quadtree(&img, &cfg);
    let bytes = write_stream(&code).map_err(|source| CliError::Stream {
        path: args.output.clone(),
        source,
    })?;
    write_atomic(&args.output, |w| w.write_all(&bytes))?;
    let [l1, l2, l3, l4] = code.leaf_counts();
    println!(
        "{}x{} {} -> {} bytes ({:.4} bpp), leaves {l1}/{l2}/{l3}/{l4}, sub-block coded {}",
        img.width(),
        img.height(),
        cfg.mode,
        bytes.len(),
        (bytes.len() * 8) as f64 / (img.width() * img.height()) as f64,
        code.phase2_count()
    );
    Ok(())
}

fn run_decode(args: DecodeArgs) -> Result<()> {
    let bytes = read_file(&args.input)?;
    let code = read_stream(&bytes).map_err(|source| CliError::Stream {
        path: args.input.clone(),
        source,
    })?;
    let cfg = DecodeConfig {
        max_iters: args.iters,
        stop_delta: args.stop_delta,
        ..DecodeConfig::default()
    };
    let img = decode(&code, &cfg);
    let pgm = save_pgm(&img);
    write_atomic(&args.output, |w| w.write_all(&pgm))
}

fn run_metrics(args: MetricsArgs) -> Result<()> {
    let a = read_pgm(&args.a)?;
    let b = read_pgm(&args.b)?;
    let err = mse(&a, &b)?;
    println!("mse {err:.6}");
    println!("psnr {}", format_psnr(psnr(&a, &b)?));
    Ok(())
}

fn run_rd(args: RdArgs) -> Result<()> {
    let img = read_pgm(&args.input)?;
    let mut grid = SweepGrid::uniform(args.modes.iter().map(|&m| m.into()).collect(), &args.e_grid);
    grid.mean_tol = args.tmean;
    grid.technique2 = match args.technique2 {
        SwitchSet::On => vec![true],
        SwitchSet::Off => vec![false],
        SwitchSet::Both => vec![false, true],
    };
    let points = rd_sweep(&img, &grid)?;
    write_atomic(&args.csv, |w| write_rd_csv(&points, w))?;
    println!("{} points written to {}", points.len(), args.csv.display());
    Ok(())
}

fn joint_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}_joint.csv"))
}

fn run_offsets(args: OffsetsArgs) -> Result<()> {
    let img = read_pgm(&args.input)?;
    let cfg = EncoderConfig {
        full_search_step: usize::from(args.stride),
        ..EncoderConfig::default()
    };
    let found = encode_full_search(&img, args.range_size, &cfg)?;
    let hist = OffsetHistogram::from_samples(&found.offsets());
    write_atomic(&args.csv, |w| hist.write_marginal_csv(w))?;
    write_atomic(&joint_path(&args.csv), |w| hist.write_joint_csv(w))?;
    let show = |m: Option<i64>| m.map_or_else(|| "-".to_owned(), |v| v.to_string());
    println!(
        "{} ranges, mode dx {} dy {}",
        hist.total,
        show(hist.mode_x()),
        show(hist.mode_y())
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Encode(a) => run_encode(a),
        Command::Decode(a) => run_decode(a),
        Command::Metrics(a) => run_metrics(a),
        Command::Bench(BenchCommand::Rd(a)) => run_rd(a),
        Command::Analyze(AnalyzeCommand::Offsets(a)) => run_offsets(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
