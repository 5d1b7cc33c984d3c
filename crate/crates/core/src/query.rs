//! Range queries over compressed trajectories.
//!
//! A compressed trajectory matches a query rectangle when the
//! probability that its *raw* trajectory touched the rectangle exceeds
//! the query threshold. [`range_query`] answers that with a
//! filtering-and-verification pipeline:
//!
//! 1. collect candidate segment runs from the quadtree leaves that
//!    overlap the rectangle;
//! 2. prune runs by their bounding rectangle: disjoint runs drop out,
//!    and a run box fully inside the rectangle proves membership (its
//!    endpoints are genuine raw points inside);
//! 3. accept trajectories with a retained endpoint inside the rectangle;
//! 4. estimate the remaining trajectories' probabilities by Monte-Carlo
//!    sampling of their overlapping segments and compose per trajectory.
//!
//! [`range_query_linear`] runs stages 2–4 over every segment of every
//! trajectory without the index; with equal seeds it returns the same
//! result set, which is the index correctness oracle. Each trajectory is
//! accepted at the earliest stage that proves it, so the three accept
//! sets partition the result. Trajectories need at least one segment
//! (two retained points) to be visible to either path.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Rect;
use crate::index::{Quadtree, SegmentRun};
use crate::model::{CompressedDataset, CompressedTrajectory, RawTrajectory, TrajectoryId};
use crate::uncertainty::{
    compose_trajectory_probability, derive_seed, estimate_segment_probability, SamplerConfig,
    Stadium,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("probability threshold must lie in [0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("index epsilon {tree} does not match dataset epsilon {dataset}")]
    EpsilonMismatch { tree: f64, dataset: f64 },
    #[error("raw and compressed datasets do not correspond trajectory-by-trajectory")]
    DatasetMismatch,
}

/// A rectangle query with its acceptance threshold and sampling setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeQuery {
    pub region: Rect,
    /// Strict acceptance bound on the composed trajectory probability.
    pub probability_threshold: f64,
    pub sampler: SamplerConfig,
}

impl RangeQuery {
    pub fn new(
        region: Rect,
        probability_threshold: f64,
        sampler: SamplerConfig,
    ) -> Result<Self, QueryError> {
        if !(0.0..1.0).contains(&probability_threshold) {
            return Err(QueryError::InvalidThreshold(probability_threshold));
        }
        Ok(Self {
            region,
            probability_threshold,
            sampler,
        })
    }
}

/// Result set plus per-stage diagnostics. The three accept sets are
/// pairwise disjoint and union to `result_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub result_ids: BTreeSet<TrajectoryId>,
    /// Accepted because a run's bounding box lies inside the region.
    pub accepted_by_mbr: BTreeSet<TrajectoryId>,
    /// Accepted because a retained endpoint lies inside the region.
    pub accepted_by_endpoint: BTreeSet<TrajectoryId>,
    /// Accepted because the composed probability cleared the threshold.
    pub accepted_by_probability: BTreeSet<TrajectoryId>,
    /// Candidate runs out of the filter stage.
    pub candidate_runs: usize,
    /// Runs surviving bounding-box pruning.
    pub runs_after_mbr: usize,
    /// Runs surviving the endpoint check.
    pub runs_after_endpoints: usize,
    /// Wall time per stage (filter, box-prune, endpoints, sampling);
    /// zeros without the `std` feature.
    pub stage_nanos: [u64; 4],
}

struct StageTimer {
    #[cfg(feature = "std")]
    last: std::time::Instant,
}

impl StageTimer {
    fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            last: std::time::Instant::now(),
        }
    }

    #[allow(unused_mut)]
    fn lap(&mut self) -> u64 {
        #[cfg(feature = "std")]
        {
            let now = std::time::Instant::now();
            let nanos = now.duration_since(self.last).as_nanos() as u64;
            self.last = now;
            nanos
        }
        #[cfg(not(feature = "std"))]
        {
            0
        }
    }
}

/// Indexed range query. The tree must have been built over `dataset`
/// with the same epsilon.
pub fn range_query(
    query: &RangeQuery,
    dataset: &CompressedDataset,
    tree: &Quadtree,
) -> Result<QueryOutcome, QueryError> {
    if tree.epsilon() != dataset.epsilon {
        return Err(QueryError::EpsilonMismatch {
            tree: tree.epsilon(),
            dataset: dataset.epsilon,
        });
    }
    let mut timer = StageTimer::start();
    let runs = tree.query_leaves(&query.region);
    let stage1 = timer.lap();
    Ok(verify_runs(query, dataset, runs, stage1))
}

/// Index-free oracle: stages 2–4 over every segment of every
/// trajectory. Same seeds produce the same result set as [`range_query`].
pub fn range_query_linear(query: &RangeQuery, dataset: &CompressedDataset) -> QueryOutcome {
    let mut timer = StageTimer::start();
    let runs: Vec<SegmentRun> = dataset
        .trajectories
        .iter()
        .filter(|t| t.segment_count() > 0)
        .map(|t| SegmentRun {
            trajectory: t.id,
            first_segment: 0,
            last_segment: t.segment_count() - 1,
        })
        .collect();
    let stage1 = timer.lap();
    verify_runs(query, dataset, runs, stage1)
}

/// Id lookup over the dataset. Datasets sorted by id (the compressor
/// preserves input order, and generated ids ascend) get binary search;
/// anything else pays for one map per query.
enum Lookup<'a> {
    Sorted(&'a [CompressedTrajectory]),
    Map(BTreeMap<TrajectoryId, &'a CompressedTrajectory>),
}

impl<'a> Lookup<'a> {
    fn over(dataset: &'a CompressedDataset) -> Self {
        let sorted = dataset
            .trajectories
            .windows(2)
            .all(|w| w[0].id < w[1].id);
        if sorted {
            Lookup::Sorted(&dataset.trajectories)
        } else {
            Lookup::Map(
                dataset
                    .trajectories
                    .iter()
                    .map(|t| (t.id, t))
                    .collect(),
            )
        }
    }

    fn get(&self, id: TrajectoryId) -> &'a CompressedTrajectory {
        match self {
            Lookup::Sorted(ts) => {
                let i = ts.partition_point(|t| t.id < id);
                let t = &ts[i];
                debug_assert_eq!(t.id, id);
                t
            }
            Lookup::Map(m) => m[&id],
        }
    }
}

/// Bounding rectangle of all stadium regions of a run's segments: the
/// box of the run's retained points grown by epsilon.
fn run_bounding_rect(t: &CompressedTrajectory, run: &SegmentRun, epsilon: f64) -> Rect {
    let mut rect = Rect::around_point(t.retained[run.first_segment].position());
    for p in &t.retained[run.first_segment + 1..=run.last_segment + 1] {
        rect = rect.union(&Rect::around_point(p.position()));
    }
    rect.expanded(epsilon)
}

fn verify_runs(
    query: &RangeQuery,
    dataset: &CompressedDataset,
    runs: Vec<SegmentRun>,
    stage1_nanos: u64,
) -> QueryOutcome {
    let epsilon = dataset.epsilon;
    let region = &query.region;
    let by_id = Lookup::over(dataset);
    let mut timer = StageTimer::start();

    let candidate_runs = runs.len();
    let mut accepted_by_mbr: BTreeSet<TrajectoryId> = BTreeSet::new();
    let mut after_mbr: Vec<SegmentRun> = Vec::new();
    for run in runs {
        let t = by_id.get(run.trajectory);
        let mbr = run_bounding_rect(t, &run, epsilon);
        if !mbr.intersects(region) {
            continue;
        }
        if region.contains_rect(&mbr) {
            accepted_by_mbr.insert(run.trajectory);
        } else {
            after_mbr.push(run);
        }
    }
    after_mbr.retain(|r| !accepted_by_mbr.contains(&r.trajectory));
    let stage2 = timer.lap();

    let mut accepted_by_endpoint: BTreeSet<TrajectoryId> = BTreeSet::new();
    let mut after_endpoints: Vec<SegmentRun> = Vec::new();
    for run in after_mbr.iter() {
        let t = by_id.get(run.trajectory);
        let hit = t.retained[run.first_segment..=run.last_segment + 1]
            .iter()
            .any(|p| region.contains(p.position()));
        if hit {
            accepted_by_endpoint.insert(run.trajectory);
        } else {
            after_endpoints.push(*run);
        }
    }
    after_endpoints.retain(|r| !accepted_by_endpoint.contains(&r.trajectory));
    let stage3 = timer.lap();

    // Stage 4: per trajectory, estimate only segments whose stadium
    // overlaps the region (the rest contribute zero), in segment order,
    // each with a seed derived from (master, trajectory, segment) so the
    // indexed and linear paths draw identically.
    let mut by_trajectory: BTreeMap<TrajectoryId, Vec<SegmentRun>> = BTreeMap::new();
    for run in after_endpoints.iter() {
        by_trajectory.entry(run.trajectory).or_default().push(*run);
    }
    let mut accepted_by_probability: BTreeSet<TrajectoryId> = BTreeSet::new();
    for (id, traj_runs) in &by_trajectory {
        let t = by_id.get(*id);
        let mut probs: Vec<f64> = Vec::new();
        for run in traj_runs {
            for s in run.segments() {
                let seg = t.segment(s);
                if !Stadium::new(seg, epsilon).intersects_rect(region) {
                    continue;
                }
                let seed = derive_seed(query.sampler.seed, &[id.0, s as u64]);
                probs.push(estimate_segment_probability(
                    seg,
                    region,
                    epsilon,
                    t.discarded_counts[s],
                    &query.sampler.with_seed(seed),
                ));
            }
        }
        if compose_trajectory_probability(probs) > query.probability_threshold {
            accepted_by_probability.insert(*id);
        }
    }
    let stage4 = timer.lap();

    let mut result_ids = accepted_by_mbr.clone();
    result_ids.extend(accepted_by_endpoint.iter().copied());
    result_ids.extend(accepted_by_probability.iter().copied());

    QueryOutcome {
        result_ids,
        accepted_by_mbr,
        accepted_by_endpoint,
        accepted_by_probability,
        candidate_runs,
        runs_after_mbr: after_mbr.len(),
        runs_after_endpoints: after_endpoints.len(),
        stage_nanos: [stage1_nanos, stage2, stage3, stage4],
    }
}

/// Ids of raw trajectories with at least one point inside `region`
/// (the traditional criterion; ground truth for evaluation).
pub fn query_raw(region: &Rect, raws: &[RawTrajectory]) -> BTreeSet<TrajectoryId> {
    raws.iter()
        .filter(|t| t.points().iter().any(|p| region.contains(p.position())))
        .map(|t| t.id())
        .collect()
}

/// Ids of compressed trajectories with at least one *retained* point
/// inside `region`: the traditional criterion applied to compressed
/// data. Always a subset of [`query_raw`] on the matching raw set.
pub fn query_compressed_traditional(
    region: &Rect,
    dataset: &CompressedDataset,
) -> BTreeSet<TrajectoryId> {
    dataset
        .trajectories
        .iter()
        .filter(|t| t.retained.iter().any(|p| region.contains(p.position())))
        .map(|t| t.id)
        .collect()
}

/// Which criterion the evaluation runs on the compressed side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    /// Retained-point membership only.
    Traditional,
    /// The probabilistic pipeline at the configured threshold.
    Probabilistic,
}

/// Per-query evaluation row. Metrics are `None` when undefined (that
/// side of the comparison returned nothing); a query empty on both
/// sides is skipped entirely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub query_index: usize,
    pub raw_hits: usize,
    pub compressed_hits: usize,
    pub matched: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub skipped: bool,
}

/// Averages over the defined entries of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalSummary {
    pub evaluated: usize,
    pub skipped: usize,
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub avg_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub summary: EvalSummary,
}

/// Check the 1:1 id correspondence `evaluate` relies on: identical id
/// sets, no duplicates on either side.
pub fn check_correspondence(
    raws: &[RawTrajectory],
    dataset: &CompressedDataset,
) -> Result<(), QueryError> {
    let raw_ids: BTreeSet<TrajectoryId> = raws.iter().map(|t| t.id()).collect();
    let compressed_ids: BTreeSet<TrajectoryId> =
        dataset.trajectories.iter().map(|t| t.id).collect();
    if raw_ids != compressed_ids
        || raw_ids.len() != raws.len()
        || compressed_ids.len() != dataset.trajectories.len()
    {
        return Err(QueryError::DatasetMismatch);
    }
    Ok(())
}

/// Score one query of a batch. The probabilistic seed is derived from
/// (base seed, query index), so rows can be computed in any order,
/// including in parallel, and still reproduce exactly.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_query(
    query_index: usize,
    region: &Rect,
    raws: &[RawTrajectory],
    dataset: &CompressedDataset,
    tree: &Quadtree,
    mode: QueryMode,
    probability_threshold: f64,
    sampler: &SamplerConfig,
) -> Result<EvalRow, QueryError> {
    let q_r = query_raw(region, raws);
    let q_c = match mode {
        QueryMode::Traditional => query_compressed_traditional(region, dataset),
        QueryMode::Probabilistic => {
            let query = RangeQuery::new(
                *region,
                probability_threshold,
                sampler.with_seed(derive_seed(sampler.seed, &[query_index as u64])),
            )?;
            range_query(&query, dataset, tree)?.result_ids
        }
    };
    Ok(score_row(query_index, &q_r, &q_c))
}

/// Run a query batch against ground truth and score it.
///
/// Per query, the ground truth is [`query_raw`]; the compressed answer
/// comes from the chosen mode.
pub fn evaluate(
    queries: &[Rect],
    raws: &[RawTrajectory],
    dataset: &CompressedDataset,
    tree: &Quadtree,
    mode: QueryMode,
    probability_threshold: f64,
    sampler: &SamplerConfig,
) -> Result<EvalReport, QueryError> {
    check_correspondence(raws, dataset)?;
    let mut rows = Vec::with_capacity(queries.len());
    for (query_index, region) in queries.iter().enumerate() {
        rows.push(evaluate_query(
            query_index,
            region,
            raws,
            dataset,
            tree,
            mode,
            probability_threshold,
            sampler,
        )?);
    }
    let summary = summarize(&rows);
    Ok(EvalReport { rows, summary })
}

fn score_row(
    query_index: usize,
    q_r: &BTreeSet<TrajectoryId>,
    q_c: &BTreeSet<TrajectoryId>,
) -> EvalRow {
    let matched = q_r.intersection(q_c).count();
    let raw_hits = q_r.len();
    let compressed_hits = q_c.len();
    if raw_hits == 0 && compressed_hits == 0 {
        return EvalRow {
            query_index,
            raw_hits,
            compressed_hits,
            matched,
            precision: None,
            recall: None,
            f1: None,
            skipped: true,
        };
    }
    let precision = (compressed_hits > 0).then(|| matched as f64 / compressed_hits as f64);
    let recall = (raw_hits > 0).then(|| matched as f64 / raw_hits as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => Some(0.0),
    };
    EvalRow {
        query_index,
        raw_hits,
        compressed_hits,
        matched,
        precision,
        recall,
        f1,
        skipped: false,
    }
}

/// Batch averages over the defined metrics of `rows`.
pub fn summarize(rows: &[EvalRow]) -> EvalSummary {
    let mut summary = EvalSummary::default();
    let mut pre = (0.0f64, 0usize);
    let mut rec = (0.0f64, 0usize);
    let mut f1 = (0.0f64, 0usize);
    for row in rows {
        if row.skipped {
            summary.skipped += 1;
            continue;
        }
        summary.evaluated += 1;
        if let Some(p) = row.precision {
            pre = (pre.0 + p, pre.1 + 1);
        }
        if let Some(r) = row.recall {
            rec = (rec.0 + r, rec.1 + 1);
        }
        if let Some(f) = row.f1 {
            f1 = (f1.0 + f, f1.1 + 1);
        }
    }
    summary.avg_precision = if pre.1 > 0 { pre.0 / pre.1 as f64 } else { 0.0 };
    summary.avg_recall = if rec.1 > 0 { rec.0 / rec.1 as f64 } else { 0.0 };
    summary.avg_f1 = if f1.1 > 0 { f1.0 / f1.1 as f64 } else { 0.0 };
    summary
}

/// A reproducible batch of square query rectangles: centers uniform in
/// `bounds`, areas uniform in `[area_min, area_max]`.
pub fn generate_query_batch(
    bounds: &Rect,
    count: usize,
    area_min: f64,
    area_max: f64,
    seed: u64,
) -> Vec<Rect> {
    assert!(area_min > 0.0 && area_min <= area_max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let cx = rng.random_range(bounds.min_x..=bounds.max_x);
            let cy = rng.random_range(bounds.min_y..=bounds.max_y);
            let half = 0.5 * libm::sqrt(rng.random_range(area_min..=area_max));
            Rect::new(cx - half, cy - half, cx + half, cy + half)
        })
        .collect()
}

/// Convenience wrapper over the seeded query-rectangle generator keyed
/// by a dataset's bounding box.
pub fn query_batch_for_dataset(
    dataset_bounds: Option<Rect>,
    count: usize,
    area_min: f64,
    area_max: f64,
    seed: u64,
) -> Vec<Rect> {
    match dataset_bounds {
        Some(b) => generate_query_batch(&b, count, area_min, area_max, seed),
        None => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{compress_dataset, CompressionConfig};
    use crate::index::IndexConfig;
    use crate::model::TrajectoryPoint;
    use crate::uncertainty::DEFAULT_SAMPLE_COUNT;
    use alloc::vec;

    fn raw(id: u64, pts: &[(f64, f64)]) -> RawTrajectory {
        let points = pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| TrajectoryPoint::new(x, y, i as f64))
            .collect();
        RawTrajectory::new(TrajectoryId(id), points).unwrap()
    }

    fn ids(v: &[u64]) -> BTreeSet<TrajectoryId> {
        v.iter().copied().map(TrajectoryId).collect()
    }

    fn sampler(seed: u64) -> SamplerConfig {
        SamplerConfig::new(0.2, DEFAULT_SAMPLE_COUNT, seed)
    }

    /// Three well-separated trajectories on a line, compressed at eps 0.5.
    fn fixture() -> (Vec<RawTrajectory>, CompressedDataset, Quadtree) {
        let raws = vec![
            raw(1, &[(0.0, 0.0), (1.0, 0.1), (2.0, 0.0), (3.0, 0.1), (4.0, 0.0)]),
            raw(2, &[(10.0, 0.0), (11.0, 0.1), (12.0, 0.0), (13.0, 0.1), (14.0, 0.0)]),
            raw(3, &[(20.0, 0.0), (21.0, 0.1), (22.0, 0.0), (23.0, 0.1), (24.0, 0.0)]),
        ];
        let (ds, _) = compress_dataset(&raws, &CompressionConfig::new(0.5).unwrap());
        let tree = Quadtree::build(&ds, &IndexConfig::new(2, 0.5).unwrap());
        (raws, ds, tree)
    }

    #[test]
    fn covering_region_accepts_everything_by_mbr() {
        let (_, ds, tree) = fixture();
        let q = RangeQuery::new(Rect::new(-10.0, -10.0, 40.0, 10.0), 0.5, sampler(1)).unwrap();
        let out = range_query(&q, &ds, &tree).unwrap();
        assert_eq!(out.result_ids, ids(&[1, 2, 3]));
        assert_eq!(out.accepted_by_mbr, ids(&[1, 2, 3]));
        assert!(out.accepted_by_endpoint.is_empty());
        assert!(out.accepted_by_probability.is_empty());
    }

    #[test]
    fn disjoint_region_is_empty() {
        let (_, ds, tree) = fixture();
        let q = RangeQuery::new(Rect::new(100.0, 100.0, 101.0, 101.0), 0.5, sampler(1)).unwrap();
        let out = range_query(&q, &ds, &tree).unwrap();
        assert!(out.result_ids.is_empty());
        assert_eq!(out.candidate_runs, 0);
    }

    #[test]
    fn endpoint_stage_accepts_partial_overlap() {
        let (_, ds, tree) = fixture();
        // Contains the first retained point of trajectory 1 but not the
        // whole expanded bounding box.
        let q = RangeQuery::new(Rect::new(-0.1, -0.1, 0.1, 0.1), 0.5, sampler(1)).unwrap();
        let out = range_query(&q, &ds, &tree).unwrap();
        assert_eq!(out.result_ids, ids(&[1]));
        assert_eq!(out.accepted_by_endpoint, ids(&[1]));
    }

    #[test]
    fn linear_equals_indexed_on_fixture() {
        let (_, ds, tree) = fixture();
        for (i, rect) in [
            Rect::new(-10.0, -10.0, 40.0, 10.0),
            Rect::new(-0.1, -0.1, 0.1, 0.1),
            Rect::new(1.4, 0.2, 1.6, 0.4),
            Rect::new(9.0, -1.0, 30.0, 1.0),
            Rect::new(100.0, 100.0, 101.0, 101.0),
        ]
        .iter()
        .enumerate()
        {
            let q = RangeQuery::new(*rect, 0.3, sampler(100 + i as u64)).unwrap();
            let indexed = range_query(&q, &ds, &tree).unwrap();
            let linear = range_query_linear(&q, &ds);
            assert_eq!(indexed.result_ids, linear.result_ids, "query {i}");
        }
    }

    #[test]
    fn epsilon_mismatch_is_rejected() {
        let (_, ds, _) = fixture();
        let other_tree = Quadtree::build(&ds, &IndexConfig::new(2, 0.25).unwrap());
        let q = RangeQuery::new(Rect::new(0.0, 0.0, 1.0, 1.0), 0.5, sampler(1)).unwrap();
        assert!(matches!(
            range_query(&q, &ds, &other_tree),
            Err(QueryError::EpsilonMismatch { .. })
        ));
    }

    #[test]
    fn threshold_validation() {
        assert!(RangeQuery::new(Rect::new(0.0, 0.0, 1.0, 1.0), 1.0, sampler(1)).is_err());
        assert!(RangeQuery::new(Rect::new(0.0, 0.0, 1.0, 1.0), -0.1, sampler(1)).is_err());
        assert!(RangeQuery::new(Rect::new(0.0, 0.0, 1.0, 1.0), 0.0, sampler(1)).is_ok());
    }

    #[test]
    fn raw_query_finds_discarded_crossings() {
        // The motivating failure: the region sits between retained
        // points, over a discarded one.
        let raws = vec![raw(1, &[(0.0, 0.0), (1.0, 0.05), (2.0, 0.0)])];
        let (ds, _) = compress_dataset(&raws, &CompressionConfig::new(0.5).unwrap());
        assert_eq!(ds.trajectories[0].retained.len(), 2);
        let region = Rect::new(0.9, -0.2, 1.1, 0.2);
        assert_eq!(query_raw(&region, &raws), ids(&[1]));
        assert!(query_compressed_traditional(&region, &ds).is_empty());
    }

    #[test]
    fn traditional_subset_of_raw() {
        let (raws, ds, _) = fixture();
        for rect in [
            Rect::new(0.0, 0.0, 5.0, 1.0),
            Rect::new(0.5, 0.0, 1.5, 0.2),
            Rect::new(-5.0, -5.0, 50.0, 5.0),
        ] {
            let qr = query_raw(&rect, &raws);
            let qc = query_compressed_traditional(&rect, &ds);
            assert!(qc.is_subset(&qr));
        }
    }

    #[test]
    fn eval_metrics_arithmetic() {
        let q_r = ids(&[1, 2, 3]);
        let q_c = ids(&[2, 3, 4]);
        let row = score_row(0, &q_r, &q_c);
        assert_eq!(row.precision, Some(2.0 / 3.0));
        assert_eq!(row.recall, Some(2.0 / 3.0));
        assert!((row.f1.unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let equal = score_row(1, &q_r, &q_r.clone());
        assert_eq!(equal.precision, Some(1.0));
        assert_eq!(equal.recall, Some(1.0));
        assert_eq!(equal.f1, Some(1.0));

        let both_empty = score_row(2, &ids(&[]), &ids(&[]));
        assert!(both_empty.skipped);

        let one_empty = score_row(3, &q_r, &ids(&[]));
        assert_eq!(one_empty.precision, None);
        assert_eq!(one_empty.recall, Some(0.0));
        assert_eq!(one_empty.f1, Some(0.0));
    }

    #[test]
    fn evaluate_traditional_precision_is_one() {
        let (raws, ds, tree) = fixture();
        let queries = generate_query_batch(&tree.bounds(), 50, 0.5, 4.0, 77);
        let report = evaluate(
            &queries,
            &raws,
            &ds,
            &tree,
            QueryMode::Traditional,
            0.5,
            &sampler(5),
        )
        .unwrap();
        for row in &report.rows {
            if row.compressed_hits > 0 {
                assert_eq!(row.precision, Some(1.0));
            }
        }
    }

    #[test]
    fn evaluate_rejects_mismatched_datasets() {
        let (raws, ds, tree) = fixture();
        let truncated = &raws[..2];
        assert!(matches!(
            evaluate(
                &[Rect::new(0.0, 0.0, 1.0, 1.0)],
                truncated,
                &ds,
                &tree,
                QueryMode::Traditional,
                0.5,
                &sampler(5),
            ),
            Err(QueryError::DatasetMismatch)
        ));
    }

    #[test]
    fn query_batch_is_reproducible() {
        let bounds = Rect::new(0.0, 0.0, 100.0, 100.0);
        let a = generate_query_batch(&bounds, 10, 1.0, 25.0, 42);
        let b = generate_query_batch(&bounds, 10, 1.0, 25.0, 42);
        assert_eq!(a, b);
        for r in &a {
            let area = r.width() * r.height();
            assert!((1.0..=25.0 + 1e-9).contains(&area));
            assert!((r.width() - r.height()).abs() < 1e-12);
        }
    }

    #[test]
    fn micro_dataset_accepts_one_per_stage() {
        // One trajectory per acceptance stage: fully contained box,
        // endpoint inside, and discarded-points-only overlap.
        let eps = 0.5;
        let region = Rect::new(0.0, 0.0, 10.0, 10.0);
        let wiggly = |x0: f64, x1: f64, base: f64, amp: f64, n: usize| -> Vec<(f64, f64)> {
            (0..n)
                .map(|i| {
                    let x = x0 + (x1 - x0) * i as f64 / (n - 1) as f64;
                    (x, base + amp * (x * 2.1f64).sin())
                })
                .collect()
        };
        // Wiggle amplitudes keep the dataset deviation spread high
        // enough that sampled offsets reach the region.
        let contained = raw(1, &wiggly(2.0, 8.0, 3.0, 0.3, 30));
        let endpoint = raw(2, &wiggly(5.0, 50.0, 5.0, 0.3, 60));
        let grazing = raw(3, &wiggly(-1.0, 11.0, 10.08, 0.05, 25));
        let raws = vec![contained, endpoint, grazing];
        let (ds, stats) = compress_dataset(&raws, &CompressionConfig::new(eps).unwrap());
        // The grazing trajectory must compress (discarded points exist)
        // and keep all retained points outside the region.
        let g = &ds.trajectories[2];
        assert!(g.discarded_counts.iter().sum::<u64>() > 0);
        assert!(g.retained.iter().all(|p| !region.contains(p.position())));

        let tree = Quadtree::build(&ds, &IndexConfig::new(4, eps).unwrap());
        let sampler = SamplerConfig::new(stats.deviation_rms(), 15, 77);
        let q = RangeQuery::new(region, 0.5, sampler).unwrap();
        let out = range_query(&q, &ds, &tree).unwrap();

        assert_eq!(out.accepted_by_mbr, ids(&[1]));
        assert_eq!(out.accepted_by_endpoint, ids(&[2]));
        assert_eq!(out.accepted_by_probability, ids(&[3]));
        assert_eq!(out.result_ids, ids(&[1, 2, 3]));
        assert_eq!(out.result_ids, range_query_linear(&q, &ds).result_ids);

        // Empty dataset: the linear oracle returns nothing.
        let empty = CompressedDataset {
            epsilon: eps,
            sigma: 0.0,
            trajectories: vec![],
        };
        assert!(range_query_linear(&q, &empty).result_ids.is_empty());
    }

    #[test]
    fn monotone_in_threshold() {
        let (_, ds, tree) = fixture();
        let rect = Rect::new(1.0, -0.5, 12.5, 0.5);
        let mut previous: Option<BTreeSet<TrajectoryId>> = None;
        for p in [0.1, 0.3, 0.6, 0.9] {
            let q = RangeQuery::new(rect, p, sampler(9)).unwrap();
            let out = range_query(&q, &ds, &tree).unwrap();
            if let Some(prev) = previous {
                assert!(out.result_ids.is_subset(&prev));
            }
            previous = Some(out.result_ids);
        }
    }
}
