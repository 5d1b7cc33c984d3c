//! Command implementations.
//!
//! Reports (stdout or `--out` file) carry only deterministic content;
//! wall-clock timings go to stderr. Parallel sections map in input
//! order and fold sequentially, so `--threads 1` and `--threads N`
//! produce identical bytes.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use traj_core::compress::{
    compress, compute_stats, CompressError, CompressionConfig, CompressionStats,
};
use traj_core::index::{IndexConfig, IndexError, Quadtree};
use traj_core::model::{CompressedDataset, ModelError, RawTrajectory, TrajectoryPoint};
use traj_core::query::{
    check_correspondence, evaluate_query, generate_query_batch, range_query, summarize,
    EvalRow, QueryError, RangeQuery,
};
use traj_core::synth::{generate, GeneratorConfig, MotifMix, SynthError};
use traj_core::uncertainty::SamplerConfig;

use crate::cli::{
    Cli, Command, CompressArgs, EvalArgs, GenerateArgs, IndexArgs, QueryArgs,
};
use crate::formats::{
    read_compressed, read_index, read_raw_csv, write_compressed, write_index, write_raw_csv,
    FormatError,
};
use crate::report::{num, short, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Compress(#[from] CompressError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for domain/validation errors, 2 for I/O and malformed files.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Format(f) => f.exit_code(),
            CliError::Write { .. } => 2,
            _ => 1,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads;
    let (report, dest) = match cli.command {
        Command::Generate(args) => (cmd_generate(args)?, None),
        Command::Compress(args) => (cmd_compress(args, threads)?, None),
        Command::Index(args) => (cmd_index(args)?, None),
        Command::Query(args) => (cmd_query(args)?, None),
        Command::Eval(args) => {
            let dest = args.out.clone();
            (cmd_eval(args, threads)?, dest)
        }
    };
    let rendered = report.render(cli.format);
    match dest {
        Some(path) => std::fs::write(&path, rendered)
            .map_err(|source| CliError::Write { path, source })?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<Report, CliError> {
    let cfg = GeneratorConfig {
        trajectory_count: args.count,
        points_min: args.points_min,
        points_max: args.points_max,
        step_mean: args.step,
        step_jitter: args.step_jitter,
        turn_sigma: args.turn_sigma,
        zigzag_angle: args.zigzag_angle,
        leg_length: args.leg_length,
        origin_spread: args.spread,
        sampling_interval: args.interval,
        motifs: MotifMix {
            smooth: args.smooth_weight,
            zigzag: args.zigzag_weight,
            u_turn: args.uturn_weight,
        },
    };
    let t0 = Instant::now();
    let raws = generate(&cfg, args.seed)?;
    write_raw_csv(&args.out, &raws)?;
    let total_points: usize = raws.iter().map(RawTrajectory::len).sum();
    eprintln!(
        "timing: generate {:.3}s ({} points)",
        t0.elapsed().as_secs_f64(),
        total_points
    );

    let mut report = Report::new("generate");
    report
        .config("count", args.count)
        .config("points_min", args.points_min)
        .config("points_max", args.points_max)
        .config("step", num(args.step))
        .config("step_jitter", num(args.step_jitter))
        .config("turn_sigma", num(args.turn_sigma))
        .config("zigzag_angle", num(args.zigzag_angle))
        .config("leg_length", args.leg_length)
        .config("spread", num(args.spread))
        .config("interval", num(args.interval))
        .config("smooth_weight", num(args.smooth_weight))
        .config("zigzag_weight", num(args.zigzag_weight))
        .config("uturn_weight", num(args.uturn_weight))
        .config("seed", args.seed)
        .config("out", args.out.display());
    report
        .field("trajectories", raws.len())
        .field("points", total_points);
    Ok(report)
}

/// Treat stored x,y as lon,lat degrees and map them to meters on an
/// equirectangular frame anchored at the dataset's mean latitude.
fn project_equirectangular(raws: Vec<RawTrajectory>) -> Result<Vec<RawTrajectory>, CliError> {
    const EARTH_RADIUS_M: f64 = 6_371_000.0;
    let (sum, n) = raws
        .iter()
        .flat_map(|t| t.points())
        .fold((0.0f64, 0u64), |(s, n), p| (s + p.y, n + 1));
    if n == 0 {
        return Ok(raws);
    }
    let k = EARTH_RADIUS_M * (sum / n as f64).to_radians().cos();
    raws.into_iter()
        .map(|t| {
            let points = t
                .points()
                .iter()
                .map(|p| {
                    TrajectoryPoint::new(
                        k * p.x.to_radians(),
                        EARTH_RADIUS_M * p.y.to_radians(),
                        p.t,
                    )
                })
                .collect();
            RawTrajectory::new(t.id(), points).map_err(CliError::from)
        })
        .collect()
}

fn cmd_compress(args: CompressArgs, threads: usize) -> Result<Report, CliError> {
    let raws = read_raw_csv(&args.input)?;
    let raws = if args.project_equirect {
        project_equirectangular(raws)?
    } else {
        raws
    };
    let cfg = CompressionConfig::new(args.epsilon)?;

    let t0 = Instant::now();
    let per_trajectory: Vec<(_, CompressionStats)> = with_pool(threads, || {
        raws.par_iter()
            .map(|raw| {
                let c = compress(raw, &cfg);
                let s = compute_stats(raw, &c).expect("compressor output is aligned");
                (c, s)
            })
            .collect()
    });
    let elapsed = t0.elapsed().as_secs_f64();

    // Sequential fold in input order keeps the statistics byte-stable
    // across thread counts.
    let mut stats = CompressionStats::default();
    let mut trajectories = Vec::with_capacity(per_trajectory.len());
    for (c, s) in per_trajectory {
        stats.merge(&s);
        trajectories.push(c);
    }
    let dataset = CompressedDataset {
        epsilon: cfg.epsilon(),
        sigma: stats.deviation_rms(),
        trajectories,
    };
    write_compressed(&args.out, &dataset)?;

    let n = stats.raw_point_count();
    eprintln!(
        "timing: compress {elapsed:.3}s ({:.3} us/point)",
        if n > 0 { elapsed * 1e6 / n as f64 } else { 0.0 }
    );

    let mut report = Report::new("compress");
    report
        .config("input", args.input.display())
        .config("epsilon", num(args.epsilon))
        .config("project_equirect", args.project_equirect)
        .config("out", args.out.display());
    report
        .field("trajectories", dataset.trajectories.len())
        .field("raw_points", n)
        .field("retained_points", stats.retained_point_count())
        .field(
            "compression_rate",
            if stats.retained_point_count() > 0 {
                num(stats.compression_rate())
            } else {
                "n/a".into()
            },
        )
        .field("max_deviation", num(stats.max_deviation()))
        .field("mean_deviation", num(stats.mean_deviation()))
        .field("sigma", num(dataset.sigma));
    Ok(report)
}

fn cmd_index(args: IndexArgs) -> Result<Report, CliError> {
    let dataset = read_compressed(&args.input)?;
    let cfg = IndexConfig::new(args.xi, dataset.epsilon)?;
    let t0 = Instant::now();
    let tree = Quadtree::build(&dataset, &cfg);
    let elapsed = t0.elapsed().as_secs_f64();
    write_index(&args.out, &tree)?;
    eprintln!("timing: index build {elapsed:.3}s");

    let stats = tree.stats();
    let mut report = Report::new("index");
    report
        .config("input", args.input.display())
        .config("xi", args.xi)
        .config("epsilon", num(dataset.epsilon))
        .config("out", args.out.display());
    report
        .field("leaf_count", stats.leaf_count)
        .field("min_leaf_height", stats.min_leaf_height)
        .field("max_leaf_height", stats.max_leaf_height)
        .field("avg_leaf_height", num(stats.avg_leaf_height))
        .field("indexed_endpoints", stats.total_endpoints)
        .field("max_leaf_endpoints", stats.max_leaf_endpoints);
    Ok(report)
}

fn cmd_query(args: QueryArgs) -> Result<Report, CliError> {
    let dataset = read_compressed(&args.input)?;
    let tree = read_index(&args.index)?;
    let sampler = SamplerConfig::new(dataset.sigma, args.ns, args.seed);
    let query = RangeQuery::new(args.region, args.prob_threshold, sampler)?;
    let outcome = range_query(&query, &dataset, &tree)?;
    let [t_filter, t_mbr, t_endpoints, t_sampling] =
        outcome.stage_nanos.map(|n| n as f64 / 1e9);
    eprintln!(
        "timing: query filter {t_filter:.6}s, box-prune {t_mbr:.6}s, endpoints {t_endpoints:.6}s, sampling {t_sampling:.6}s"
    );

    let mut report = Report::new("query");
    report
        .config("index", args.index.display())
        .config("input", args.input.display())
        .config(
            "region",
            format!(
                "{},{},{},{}",
                num(args.region.min_x),
                num(args.region.min_y),
                num(args.region.max_x),
                num(args.region.max_y)
            ),
        )
        .config("prob_threshold", num(args.prob_threshold))
        .config("ns", args.ns)
        .config("seed", args.seed)
        .config("sigma", num(dataset.sigma))
        .config("epsilon", num(dataset.epsilon));
    report
        .field("results", outcome.result_ids.len())
        .field("candidate_runs", outcome.candidate_runs)
        .field("runs_after_box_prune", outcome.runs_after_mbr)
        .field("runs_after_endpoints", outcome.runs_after_endpoints)
        .field("accepted_by_box", outcome.accepted_by_mbr.len())
        .field("accepted_by_endpoint", outcome.accepted_by_endpoint.len())
        .field(
            "accepted_by_probability",
            outcome.accepted_by_probability.len(),
        );
    report.table(&["trajectory", "accepted_by"]);
    for id in &outcome.result_ids {
        let stage = if outcome.accepted_by_mbr.contains(id) {
            "box"
        } else if outcome.accepted_by_endpoint.contains(id) {
            "endpoint"
        } else {
            "probability"
        };
        report.row(&[id.to_string(), stage.to_string()]);
    }
    Ok(report)
}

fn cmd_eval(args: EvalArgs, threads: usize) -> Result<Report, CliError> {
    let raws = read_raw_csv(&args.raw)?;
    let dataset = read_compressed(&args.input)?;
    let tree = read_index(&args.index)?;
    check_correspondence(&raws, &dataset)?;

    let queries = match traj_core::model::raw_bounding_rect(&raws) {
        Some(bounds) => {
            generate_query_batch(&bounds, args.queries, args.area_min, args.area_max, args.seed)
        }
        None => Vec::new(),
    };
    let sampler = SamplerConfig::new(dataset.sigma, args.ns, args.seed);
    let mode = args.mode.into();

    let t0 = Instant::now();
    let rows: Vec<EvalRow> = with_pool(threads, || {
        queries
            .par_iter()
            .enumerate()
            .map(|(i, region)| {
                evaluate_query(
                    i,
                    region,
                    &raws,
                    &dataset,
                    &tree,
                    mode,
                    args.prob_threshold,
                    &sampler,
                )
            })
            .collect::<Result<_, _>>()
    })?;
    let elapsed = t0.elapsed().as_secs_f64();
    eprintln!(
        "timing: eval {elapsed:.3}s ({:.1} queries/s)",
        if elapsed > 0.0 { rows.len() as f64 / elapsed } else { 0.0 }
    );
    let summary = summarize(&rows);

    let mut report = Report::new("eval");
    report
        .config("raw", args.raw.display())
        .config("input", args.input.display())
        .config("index", args.index.display())
        .config("queries", args.queries)
        .config("area_min", num(args.area_min))
        .config("area_max", num(args.area_max))
        .config(
            "mode",
            match args.mode {
                crate::cli::EvalMode::Traditional => "traditional",
                crate::cli::EvalMode::Probabilistic => "probabilistic",
            },
        )
        .config("prob_threshold", num(args.prob_threshold))
        .config("ns", args.ns)
        .config("seed", args.seed)
        .config("sigma", num(dataset.sigma))
        .config("epsilon", num(dataset.epsilon));
    report.table(&[
        "query", "raw_hits", "compressed_hits", "matched", "precision", "recall", "f1",
        "skipped",
    ]);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for row in &rows {
        report.row(&[
            row.query_index.to_string(),
            row.raw_hits.to_string(),
            row.compressed_hits.to_string(),
            row.matched.to_string(),
            opt(row.precision),
            opt(row.recall),
            opt(row.f1),
            row.skipped.to_string(),
        ]);
    }
    report
        .field("evaluated", summary.evaluated)
        .field("skipped", summary.skipped)
        .field("avg_precision", short(summary.avg_precision))
        .field("avg_recall", short(summary.avg_recall))
        .field("avg_f1", short(summary.avg_f1));
    Ok(report)
}
