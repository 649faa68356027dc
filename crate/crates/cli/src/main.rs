//! `pif`: dataset generation, embedding, scoring, sliding-window detection
//! and parameter sweeps.
//!
//! Exit codes: 0 success, 2 usage error, 3 input-format error, 4 runtime
//! failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pif_core::distances::DistanceKind;
use pif_core::PifError;

#[derive(Parser, Debug)]
#[command(name = "pif", version, about = "Structure-based anomaly detection with preference isolation forests")]
struct Cli {
    /// Worker threads; defaults to the machine's parallelism. Output never
    /// depends on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic planar dataset or a range-image fixture.
    Datagen(DatagenArgs),
    /// Write the sparse preference matrix of a dataset.
    Embed(EmbedArgs),
    /// Score every point of a dataset.
    Score(ScoreArgs),
    /// Score a range image with half-overlapping windows.
    Sliding(SlidingArgs),
    /// Run a factorial sweep over datasets, methods, b and m.
    Sweep(SweepArgs),
    /// Models per window that fit a preference-storage budget.
    PlanMemory(PlanMemoryArgs),
}

#[derive(Args, Debug)]
struct SeedArg {
    /// Master seed; drawn from entropy and reported on stderr when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("kind").required(true).args(["name", "surface"]))]
struct DatagenArgs {
    /// Planar dataset: stair3, stair4, star5, star11, circle3, circle4, circle5.
    #[arg(long)]
    name: Option<String>,
    /// Range-image fixture: plane_patch, sphere_cap, saddle.
    #[arg(long)]
    surface: Option<String>,
    #[arg(long, default_value_t = 100)]
    points_per_structure: usize,
    /// Noise standard deviation; 0.01 for planar datasets, 0 for surfaces.
    #[arg(long)]
    noise: Option<f64>,
    /// Fraction of anomalies in the output.
    #[arg(long, default_value_t = 0.5)]
    anomaly_ratio: f64,
    /// Surface defect: none, dent, hole.
    #[arg(long, default_value = "none")]
    defect: String,
    /// Surface grid side in pixels.
    #[arg(long, default_value_t = 60)]
    size: usize,
    /// Defect radius in surface units.
    #[arg(long, default_value_t = 0.05)]
    defect_radius: f64,
    /// Defect depth; max(10·noise, 0.05) when omitted.
    #[arg(long)]
    defect_depth: Option<f64>,
    /// Surface grid encoding.
    #[arg(long, value_enum, default_value_t = GridFormat::Bin)]
    format: GridFormat,
    /// Where to write the surface defect mask (`row,col,defect`).
    #[arg(long)]
    mask_out: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GridFormat {
    Bin,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct EmbeddingArgs {
    /// Model family: line, circle, plane, sphere, quadric.
    #[arg(long, default_value = "line")]
    family: String,
    /// Noise standard deviation of the residuals.
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
    /// Inlier threshold in units of sigma.
    #[arg(long, default_value_t = 3.0)]
    k_sigma: f64,
    /// Binary preferences instead of the Gaussian kernel.
    #[arg(long)]
    binary: bool,
    /// Models per input point (standard setting: 10).
    #[arg(long, default_value_t = 10.0)]
    m_factor: f64,
    /// Exact pool size; overrides --m-factor.
    #[arg(long)]
    models: Option<usize>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    /// Dataset CSV.
    #[arg(long, short)]
    input: PathBuf,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    /// Voronoi trees in preference space.
    Vifor,
    /// Hashing trees in preference space.
    Rzhifor,
    /// Axis-aligned isolation forest in ambient space.
    Ifor,
    /// Euclidean Voronoi trees in ambient space.
    ViforAmbient,
}

#[derive(Args, Debug, Clone)]
struct ForestArgs {
    /// Trees per forest (standard setting: 100).
    #[arg(long = "t", default_value_t = 100)]
    trees: usize,
    /// Subsample size per tree (standard setting: 256).
    #[arg(long, default_value_t = 256)]
    psi: usize,
    /// Split distance of Voronoi trees.
    #[arg(long, default_value = "tanimoto", value_parser = parse_distance)]
    distance: DistanceKind,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Dataset CSV.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Vifor)]
    method: MethodArg,
    /// Branching factor (standard setting: 2).
    #[arg(long, default_value_t = 2)]
    b: usize,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SpeciesArg {
    Voronoi,
    Ruzhash,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ScoreFormat {
    /// `row,col,score`, empty score for uncovered pixels.
    Csv,
    /// `PIFR` float32 raster, NaN for uncovered pixels.
    Raster,
}

#[derive(Args, Debug)]
struct SlidingArgs {
    /// Depth grid, binary or CSV.
    #[arg(long, short)]
    input: PathBuf,
    /// Window side as a fraction of the shorter grid side: ω = δ / k.
    #[arg(long, default_value_t = 1)]
    omega_div: usize,
    /// Window side in pixels; overrides --omega-div.
    #[arg(long)]
    omega: Option<usize>,
    /// Local model family: plane, sphere, quadric.
    #[arg(long, default_value = "plane")]
    family: String,
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
    #[arg(long, default_value_t = 3.0)]
    k_sigma: f64,
    #[arg(long)]
    binary: bool,
    /// Models per window; derived from --budget-bytes when omitted.
    #[arg(long)]
    models: Option<usize>,
    /// Preference storage budget shared by all windows.
    #[arg(long, default_value_t = 1 << 30)]
    budget_bytes: u64,
    /// Size of one stored preference entry in bits (index plus value).
    #[arg(long, default_value_t = 96)]
    bits: u64,
    /// Branching factor (standard setting for range images: 16).
    #[arg(long, default_value_t = 16)]
    b: usize,
    #[arg(long, value_enum, default_value_t = SpeciesArg::Voronoi)]
    species: SpeciesArg,
    #[command(flatten)]
    forest: ForestArgs,
    #[arg(long, value_enum, default_value_t = ScoreFormat::Csv)]
    format: ScoreFormat,
    /// Defect mask (`row,col,defect`); prints the AUC over covered pixels.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated dataset names.
    #[arg(long, value_delimiter = ',', default_value = "stair3,stair4,star5,star11,circle3,circle4,circle5")]
    datasets: Vec<String>,
    /// Comma-separated methods: vifor[:distance], rzhifor, ifor, vifor-ambient.
    #[arg(long, value_delimiter = ',', default_value = "vifor,rzhifor,ifor")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32,64,128,256")]
    b_values: Vec<usize>,
    /// Pool sizes as multiples of the dataset size.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4,8,16")]
    m_factors: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long = "t", default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 256)]
    psi: usize,
    #[arg(long, default_value_t = 3.0)]
    k_sigma: f64,
    /// Write zero timings so the report is reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Where to write per-cell mean and standard deviation.
    #[arg(long)]
    summary_out: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct PlanMemoryArgs {
    /// Preference storage budget in bytes (default 1 GiB).
    #[arg(long, default_value_t = 1 << 30)]
    budget_bytes: u64,
    /// Size of one stored preference value, in bits.
    #[arg(long, default_value_t = 32)]
    bits: u64,
    /// Grid side in pixels.
    #[arg(long, default_value_t = 800)]
    delta: u64,
    /// Window divisor: ω = δ / k.
    #[arg(long, default_value_t = 1)]
    k: u64,
}

fn parse_distance(s: &str) -> Result<DistanceKind, String> {
    s.parse().map_err(|e: PifError| e.to_string())
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn format(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<PifError> for Failure {
    fn from(e: PifError) -> Self {
        let code = match e {
            PifError::UnknownName { .. } | PifError::InvalidConfig(_) => 2,
            PifError::Format(_) | PifError::Io(_) => 3,
            PifError::Degenerate(_) | PifError::PoolExhausted { .. } | PifError::InsufficientPoints { .. } => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        PifError::Io(e).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(4);
        }
    };
    match pool.install(|| commands::run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
