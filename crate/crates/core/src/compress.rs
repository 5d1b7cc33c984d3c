//! Error-bounded trajectory compression.
//!
//! [`compress`] is the production path: a one-pass greedy compressor that
//! keeps a [`CandidateRegion`] per open segment, so each input point is
//! examined a bounded constant number of times and working memory stays
//! constant in the trajectory length. [`compress_brute_force`] is the
//! reference oracle: it re-checks every intermediate point's deviation
//! against each candidate segment directly, quadratic but unarguable.
//! Every output of either path is `epsilon`-error-bounded: each discarded
//! point lies within `epsilon` of its covering segment, which
//! [`verify_error_bound`] re-derives from scratch.

use alloc::vec::Vec;

use crate::geometry::{segment_distance, CandidateRegion, Segment2};
use crate::model::{
    CompressedDataset, CompressedTrajectory, RawTrajectory, TrajectoryId, TrajectoryPoint,
};

/// Compression errors beyond what the model types already reject.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompressError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("trajectory {id}: compressed points are not an aligned subsequence of the raw points")]
    SubsequenceMismatch { id: TrajectoryId },
    #[error("trajectory {id}: compressed and raw trajectories have different ids ({raw_id})")]
    IdMismatch { id: TrajectoryId, raw_id: TrajectoryId },
}

/// The deviation upper bound `epsilon` a compression run is driven by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionConfig {
    epsilon: f64,
}

impl CompressionConfig {
    pub fn new(epsilon: f64) -> Result<Self, CompressError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(CompressError::InvalidEpsilon(epsilon));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Work counter for the one-pass contract: every distance evaluation,
/// candidate-region containment test and region update adds one.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompressMetrics {
    pub evaluations: u64,
}

/// One-pass error-bounded compression.
///
/// Segments share endpoints: each emitted segment ends where the next
/// one starts, and the first and last raw points are always retained.
/// Points within `epsilon` of the current anchor are skipped outright
/// (any segment from the anchor stays within `epsilon` of them); beyond
/// that the candidate region decides how far the segment can reach. The
/// segment closes at the last point the region accepted, which becomes
/// the next anchor.
pub fn compress(raw: &RawTrajectory, cfg: &CompressionConfig) -> CompressedTrajectory {
    compress_with_metrics(raw, cfg).0
}

/// [`compress`] plus the evaluation counter.
pub fn compress_with_metrics(
    raw: &RawTrajectory,
    cfg: &CompressionConfig,
) -> (CompressedTrajectory, CompressMetrics) {
    let pts = raw.points();
    let n = pts.len();
    let eps = cfg.epsilon();
    let mut metrics = CompressMetrics::default();

    let mut retained_idx: Vec<usize> = Vec::new();
    retained_idx.push(0);
    let mut i = 0usize;
    while i + 1 < n {
        let anchor = pts[i].position();
        let mut region = CandidateRegion::new(anchor);
        i += 1;
        // Points within epsilon of the anchor impose no constraint.
        while i < n {
            metrics.evaluations += 1;
            if anchor.distance(pts[i].position()) <= eps {
                i += 1;
            } else {
                break;
            }
        }
        while i < n {
            metrics.evaluations += 1;
            let p = pts[i].position();
            if region.contains(p) {
                metrics.evaluations += 1;
                region
                    .update(p, eps)
                    .expect("close-point loop leaves only points beyond epsilon");
                i += 1;
            } else {
                break;
            }
        }
        // Close the segment at the last accepted point; it doubles as
        // the next anchor.
        i -= 1;
        retained_idx.push(i);
    }
    debug_assert_eq!(*retained_idx.last().unwrap(), n - 1);

    (build_compressed(raw, &retained_idx, eps), metrics)
}

/// Greedy reference compressor checking every intermediate deviation
/// directly against each candidate segment. Quadratic; test oracle.
pub fn compress_brute_force(raw: &RawTrajectory, cfg: &CompressionConfig) -> CompressedTrajectory {
    let pts = raw.points();
    let n = pts.len();
    let eps = cfg.epsilon();

    let mut retained_idx: Vec<usize> = Vec::new();
    retained_idx.push(0);
    let mut s = 0usize;
    while s + 1 < n {
        let mut f = s + 1;
        while f + 1 < n {
            let seg = Segment2::new(pts[s].position(), pts[f + 1].position());
            let bounded = pts[s + 1..=f]
                .iter()
                .all(|p| segment_distance(p.position(), seg) <= eps);
            if !bounded {
                break;
            }
            f += 1;
        }
        retained_idx.push(f);
        s = f;
    }

    build_compressed(raw, &retained_idx, eps)
}

fn build_compressed(
    raw: &RawTrajectory,
    retained_idx: &[usize],
    epsilon: f64,
) -> CompressedTrajectory {
    let pts = raw.points();
    let retained: Vec<TrajectoryPoint> = retained_idx.iter().map(|&i| pts[i]).collect();
    let discarded_counts: Vec<u64> = retained_idx
        .windows(2)
        .map(|w| (w[1] - w[0] - 1) as u64)
        .collect();
    CompressedTrajectory::new(raw.id(), retained, discarded_counts, epsilon)
        .expect("compressor emits consistent counts")
}

/// Walk the discarded points of an aligned (raw, compressed) pair and
/// hand `(raw_index, deviation)` to the visitor. Fails when the retained
/// points are not the subsequence of the raw points that the discarded
/// counts claim.
fn for_each_deviation<F: FnMut(usize, f64)>(
    raw: &RawTrajectory,
    compressed: &CompressedTrajectory,
    mut visit: F,
) -> Result<(), CompressError> {
    let id = compressed.id;
    if raw.id() != id {
        return Err(CompressError::IdMismatch {
            id,
            raw_id: raw.id(),
        });
    }
    let pts = raw.points();
    if compressed.raw_point_count() != pts.len() as u64 {
        return Err(CompressError::SubsequenceMismatch { id });
    }

    let mut raw_i = 0usize;
    for (k, rp) in compressed.retained.iter().enumerate() {
        if pts[raw_i] != *rp {
            return Err(CompressError::SubsequenceMismatch { id });
        }
        if k < compressed.segment_count() {
            let seg = compressed.segment(k);
            let gap = compressed.discarded_counts[k] as usize;
            for (m, p) in (raw_i + 1..).zip(&pts[raw_i + 1..=raw_i + gap]) {
                visit(m, segment_distance(p.position(), seg));
            }
            raw_i += gap + 1;
        }
    }
    Ok(())
}

/// A deviation found above the bound, at the first offending raw index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    pub raw_index: usize,
    pub deviation: f64,
}

/// Outcome of re-checking a compressed trajectory against its raw source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundReport {
    /// Largest deviation of any discarded point (0 when none discarded).
    pub max_deviation: f64,
    /// First discarded point whose deviation exceeds the bound, if any.
    pub violation: Option<BoundViolation>,
}

impl ErrorBoundReport {
    pub fn is_bounded(&self) -> bool {
        self.violation.is_none()
    }
}

/// Recompute every discarded point's deviation to its covering segment
/// and report the maximum plus the first violation of `epsilon`.
pub fn verify_error_bound(
    raw: &RawTrajectory,
    compressed: &CompressedTrajectory,
    epsilon: f64,
) -> Result<ErrorBoundReport, CompressError> {
    let mut max_deviation = 0.0f64;
    let mut violation = None;
    for_each_deviation(raw, compressed, |raw_index, deviation| {
        max_deviation = max_deviation.max(deviation);
        if violation.is_none() && deviation > epsilon {
            violation = Some(BoundViolation {
                raw_index,
                deviation,
            });
        }
    })?;
    Ok(ErrorBoundReport {
        max_deviation,
        violation,
    })
}

/// Compression statistics: point counts plus the deviation distribution
/// of discarded points. Mergeable across trajectories, so dataset-level
/// numbers come from a commutative fold of per-trajectory parts.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompressionStats {
    raw_point_count: u64,
    retained_point_count: u64,
    max_deviation: f64,
    deviation_sum: f64,
    deviation_sq_sum: f64,
}

impl CompressionStats {
    pub fn raw_point_count(&self) -> u64 {
        self.raw_point_count
    }

    pub fn retained_point_count(&self) -> u64 {
        self.retained_point_count
    }

    pub fn discarded_count(&self) -> u64 {
        self.raw_point_count - self.retained_point_count
    }

    /// Raw points per retained point.
    pub fn compression_rate(&self) -> f64 {
        self.raw_point_count as f64 / self.retained_point_count as f64
    }

    pub fn max_deviation(&self) -> f64 {
        self.max_deviation
    }

    pub fn mean_deviation(&self) -> f64 {
        if self.discarded_count() == 0 {
            0.0
        } else {
            self.deviation_sum / self.discarded_count() as f64
        }
    }

    /// Root-mean-square deviation around zero: the spread statistic the
    /// Gaussian offset sampler consumes as its standard deviation.
    pub fn deviation_rms(&self) -> f64 {
        if self.discarded_count() == 0 {
            0.0
        } else {
            libm::sqrt(self.deviation_sq_sum / self.discarded_count() as f64)
        }
    }

    pub fn merge(&mut self, other: &CompressionStats) {
        self.raw_point_count += other.raw_point_count;
        self.retained_point_count += other.retained_point_count;
        self.max_deviation = self.max_deviation.max(other.max_deviation);
        self.deviation_sum += other.deviation_sum;
        self.deviation_sq_sum += other.deviation_sq_sum;
    }
}

/// Per-trajectory statistics for an aligned (raw, compressed) pair.
pub fn compute_stats(
    raw: &RawTrajectory,
    compressed: &CompressedTrajectory,
) -> Result<CompressionStats, CompressError> {
    let mut stats = CompressionStats {
        raw_point_count: raw.len() as u64,
        retained_point_count: compressed.retained.len() as u64,
        ..CompressionStats::default()
    };
    for_each_deviation(raw, compressed, |_, deviation| {
        stats.max_deviation = stats.max_deviation.max(deviation);
        stats.deviation_sum += deviation;
        stats.deviation_sq_sum += deviation * deviation;
    })?;
    Ok(stats)
}

/// Compress a whole dataset and fold the per-trajectory statistics in
/// input order. The dataset-level RMS deviation is recorded in the
/// returned dataset for the query machinery.
pub fn compress_dataset(
    raws: &[RawTrajectory],
    cfg: &CompressionConfig,
) -> (CompressedDataset, CompressionStats) {
    let mut stats = CompressionStats::default();
    let mut trajectories = Vec::with_capacity(raws.len());
    for raw in raws {
        let compressed = compress(raw, cfg);
        let s = compute_stats(raw, &compressed).expect("compressor output is aligned");
        stats.merge(&s);
        trajectories.push(compressed);
    }
    let dataset = CompressedDataset {
        epsilon: cfg.epsilon(),
        sigma: stats.deviation_rms(),
        trajectories,
    };
    (dataset, stats)
}

/// Bisect for an epsilon that compresses `raws` to roughly the target
/// rate (raw points per retained point). Best effort: rates are capped
/// by the two-endpoint minimum per trajectory, and the rate is not
/// perfectly monotone in epsilon, so the result is approximate.
pub fn find_epsilon_for_rate(raws: &[RawTrajectory], target_rate: f64, iterations: usize) -> f64 {
    assert!(target_rate >= 1.0, "compression rate is at least 1");
    let bounds = crate::model::raw_bounding_rect(raws).expect("non-empty dataset");
    let mut hi = libm::hypot(bounds.width(), bounds.height()).max(1e-9);
    let mut lo = hi * 1e-12;

    let rate_at = |eps: f64| {
        let cfg = CompressionConfig::new(eps).expect("bisection keeps epsilon positive");
        compress_dataset(raws, &cfg).1.compression_rate()
    };

    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid) < target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
