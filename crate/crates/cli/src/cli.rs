//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use traj_core::geometry::{Point2, Rect};
use traj_core::query::QueryMode;

use crate::report::OutputFormat;

#[derive(Debug, Parser)]
#[command(
    name = "traj",
    version,
    about = "Error-bounded trajectory compression, spatial indexing and probabilistic range queries"
)]
pub struct Cli {
    /// Report format written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    /// Worker thread cap (0 = one per core). Output bytes are identical
    /// for any value.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic raw trajectory dataset as CSV.
    Generate(GenerateArgs),
    /// Compress a raw CSV dataset under a deviation bound.
    Compress(CompressArgs),
    /// Build the spatial index over a compressed dataset.
    Index(IndexArgs),
    /// Run one probabilistic range query against an indexed dataset.
    Query(QueryArgs),
    /// Score a query batch on compressed data against the raw ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of trajectories.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Points per trajectory, lower bound (inclusive).
    #[arg(long, default_value_t = 100)]
    pub points_min: usize,
    /// Points per trajectory, upper bound (inclusive).
    #[arg(long, default_value_t = 500)]
    pub points_max: usize,
    /// Mean step length.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Relative step-length jitter in [0, 1).
    #[arg(long, default_value_t = 0.3)]
    pub step_jitter: f64,
    /// Heading drift per step for smooth walks (radians).
    #[arg(long, default_value_t = 0.3)]
    pub turn_sigma: f64,
    /// Alternation amplitude for zig-zag walks (radians).
    #[arg(long, default_value_t = 1.2)]
    pub zigzag_angle: f64,
    /// Steps per straight leg between exact reversals.
    #[arg(long, default_value_t = 25)]
    pub leg_length: usize,
    /// Origins are uniform in [0, spread]^2.
    #[arg(long, default_value_t = 500.0)]
    pub spread: f64,
    /// Timestamp spacing in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub interval: f64,
    /// Relative weight of the smooth-walk motif.
    #[arg(long, default_value_t = 1.0)]
    pub smooth_weight: f64,
    /// Relative weight of the zig-zag motif.
    #[arg(long, default_value_t = 1.0)]
    pub zigzag_weight: f64,
    /// Relative weight of the out-and-back motif.
    #[arg(long, default_value_t = 1.0)]
    pub uturn_weight: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    /// Raw CSV input.
    #[arg(long)]
    pub input: PathBuf,
    /// Deviation upper bound.
    #[arg(long)]
    pub epsilon: f64,
    /// Output path for the compressed dataset.
    #[arg(long)]
    pub out: PathBuf,
    /// Treat x,y as lon,lat degrees and project them onto a planar
    /// equirectangular frame (meters) before compressing.
    #[arg(long)]
    pub project_equirect: bool,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Compressed dataset input.
    #[arg(long)]
    pub input: PathBuf,
    /// Leaf capacity: a node splits while more endpoints than this fall
    /// in its region.
    #[arg(long, default_value_t = 128)]
    pub xi: usize,
    /// Output path for the index dump.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Index dump path.
    #[arg(long)]
    pub index: PathBuf,
    /// Compressed dataset path.
    #[arg(long)]
    pub input: PathBuf,
    /// Query rectangle as x1,y1,x2,y2 (corners in any order).
    #[arg(long, value_parser = parse_rect)]
    pub region: Rect,
    /// Acceptance threshold on the trajectory probability, in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub prob_threshold: f64,
    /// Sampled points per segment.
    #[arg(long, default_value_t = traj_core::uncertainty::DEFAULT_SAMPLE_COUNT)]
    pub ns: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalMode {
    Traditional,
    Probabilistic,
}

impl From<EvalMode> for QueryMode {
    fn from(mode: EvalMode) -> Self {
        match mode {
            EvalMode::Traditional => QueryMode::Traditional,
            EvalMode::Probabilistic => QueryMode::Probabilistic,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Raw CSV ground truth.
    #[arg(long)]
    pub raw: PathBuf,
    /// Compressed dataset path.
    #[arg(long)]
    pub input: PathBuf,
    /// Index dump path.
    #[arg(long)]
    pub index: PathBuf,
    /// Number of random query rectangles.
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    /// Smallest query area.
    #[arg(long, default_value_t = 100.0)]
    pub area_min: f64,
    /// Largest query area.
    #[arg(long, default_value_t = 900.0)]
    pub area_max: f64,
    /// Criterion used on the compressed side.
    #[arg(long, value_enum, default_value_t = EvalMode::Probabilistic)]
    pub mode: EvalMode,
    /// Acceptance threshold for probabilistic mode, in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub prob_threshold: f64,
    /// Sampled points per segment.
    #[arg(long, default_value_t = traj_core::uncertainty::DEFAULT_SAMPLE_COUNT)]
    pub ns: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected x1,y1,x2,y2, found {} fields", parts.len()));
    }
    let mut vals = [0.0f64; 4];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .parse()
            .map_err(|e| format!("bad coordinate {p:?}: {e}"))?;
        if !v.is_finite() {
            return Err(format!("coordinate {p:?} is not finite"));
        }
    }
    Ok(Rect::from_corners(
        Point2::new(vals[0], vals[1]),
        Point2::new(vals[2], vals[3]),
    ))
}
