//! Adaptive spatial-partition quadtree over compressed-segment endpoints.
//!
//! Nodes split while more than `xi` endpoints fall in their region, at
//! the *median* of the endpoint coordinates rather than the midpoint, so
//! skewed data still yields a balanced tree. Each split is tried both
//! ways (vertical line first or horizontal line first) and the way that
//! duplicates fewer segments across the four child regions wins. Leaves
//! store, per trajectory, maximal runs of consecutive segments whose
//! stadium regions overlap the leaf.
//!
//! Edge conventions: a point on a split line belongs to the lower/left
//! side, so every point of a region maps to exactly one child. Child
//! rectangles are stored closed; the zero-width overlap on split lines
//! only matters for stadium overlap tests, where counting a boundary
//! touch in both children is harmless.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::geometry::{Point2, Rect};
use crate::model::{CompressedDataset, TrajectoryId};
use crate::uncertainty::Stadium;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Recursion stop for pathological inputs (near-coincident endpoints).
const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("leaf capacity xi must be at least 1, got {0}")]
    InvalidXi(usize),
    #[error("index epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
}

/// Build parameters: leaf capacity `xi` and the error bound used for
/// the segments' stadium regions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct IndexConfig {
    xi: usize,
    epsilon: f64,
}

impl IndexConfig {
    pub fn new(xi: usize, epsilon: f64) -> Result<Self, IndexError> {
        if xi < 1 {
            return Err(IndexError::InvalidXi(xi));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(IndexError::InvalidEpsilon(epsilon));
        }
        Ok(Self { xi, epsilon })
    }

    pub fn xi(&self) -> usize {
        self.xi
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// A run of consecutive segments (inclusive indices) of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SegmentRun {
    pub trajectory: TrajectoryId,
    pub first_segment: usize,
    pub last_segment: usize,
}

impl SegmentRun {
    pub fn segments(&self) -> impl Iterator<Item = usize> {
        self.first_segment..=self.last_segment
    }
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
enum Node {
    Internal {
        region: Rect,
        children: Box<[Node; 4]>,
    },
    Leaf {
        region: Rect,
        runs: Vec<SegmentRun>,
        endpoint_count: usize,
    },
}

impl Node {
    fn region(&self) -> &Rect {
        match self {
            Node::Internal { region, .. } | Node::Leaf { region, .. } => region,
        }
    }
}

/// The built index. Immutable after construction; queries are read-only.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Quadtree {
    xi: usize,
    epsilon: f64,
    root: Node,
}

/// Structural statistics. Heights count nodes on the root-to-leaf path,
/// the root alone having height 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeStats {
    pub leaf_count: usize,
    pub min_leaf_height: usize,
    pub max_leaf_height: usize,
    pub avg_leaf_height: f64,
    pub total_endpoints: usize,
    pub max_leaf_endpoints: usize,
}

/// How a region is cut into four children: a primary split (vertical
/// when `vertical_first`) at the median of the contained endpoints,
/// then an independent secondary split within each half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPlan {
    pub vertical_first: bool,
    pub primary_split: f64,
    /// Secondary split coordinate for the (low, high) primary side.
    pub secondary_splits: (f64, f64),
    /// Child regions indexed `side * 2 + sub` where `side`/`sub` are 0
    /// on the low side of the primary/secondary split.
    pub rects: [Rect; 4],
}

impl SplitPlan {
    /// Index of the child a point belongs to. Points exactly on a split
    /// line go to the lower/left side.
    pub fn child_of(&self, p: Point2) -> usize {
        let (primary, secondary) = if self.vertical_first {
            (p.x, p.y)
        } else {
            (p.y, p.x)
        };
        let side = usize::from(primary > self.primary_split);
        let split = if side == 0 {
            self.secondary_splits.0
        } else {
            self.secondary_splits.1
        };
        side * 2 + usize::from(secondary > split)
    }
}

/// Lower median: element at index `(k - 1) / 2` of the sorted values.
fn lower_median(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let k = (values.len() - 1) / 2;
    let (_, median, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    *median
}

fn plan_one_way(
    region: &Rect,
    endpoints: &[Point2],
    vertical_first: bool,
) -> SplitPlan {
    let (lo, hi, s_lo, s_hi) = if vertical_first {
        (region.min_x, region.max_x, region.min_y, region.max_y)
    } else {
        (region.min_y, region.max_y, region.min_x, region.max_x)
    };
    let primary_of = |p: &Point2| if vertical_first { p.x } else { p.y };
    let secondary_of = |p: &Point2| if vertical_first { p.y } else { p.x };

    // A half with no endpoints is halved evenly instead of at a median.
    let primary_split = if endpoints.is_empty() {
        0.5 * (lo + hi)
    } else {
        let mut vals: Vec<f64> = endpoints.iter().map(primary_of).collect();
        lower_median(&mut vals)
    };

    let mut secondary = [0.5 * (s_lo + s_hi); 2];
    for (side, split) in secondary.iter_mut().enumerate() {
        let mut vals: Vec<f64> = endpoints
            .iter()
            .filter(|p| usize::from(primary_of(p) > primary_split) == side)
            .map(secondary_of)
            .collect();
        if !vals.is_empty() {
            *split = lower_median(&mut vals);
        }
    }

    let rect_of = |side: usize, sub: usize| {
        let (p_lo, p_hi) = if side == 0 {
            (lo, primary_split)
        } else {
            (primary_split, hi)
        };
        let (q_lo, q_hi) = if sub == 0 {
            (s_lo, secondary[side])
        } else {
            (secondary[side], s_hi)
        };
        if vertical_first {
            Rect::new(p_lo, q_lo, p_hi, q_hi)
        } else {
            Rect::new(q_lo, p_lo, q_hi, p_hi)
        }
    };

    SplitPlan {
        vertical_first,
        primary_split,
        secondary_splits: (secondary[0], secondary[1]),
        rects: [
            rect_of(0, 0),
            rect_of(0, 1),
            rect_of(1, 0),
            rect_of(1, 1),
        ],
    }
}

/// Plan the split of a region: try vertical-first and horizontal-first,
/// count how often segment stadiums get duplicated across the four child
/// regions of each, keep the cheaper way (ties go vertical-first).
pub fn plan_split(region: &Rect, endpoints: &[Point2], stadiums: &[Stadium]) -> SplitPlan {
    let a = plan_one_way(region, endpoints, true);
    let b = plan_one_way(region, endpoints, false);
    let cost = |plan: &SplitPlan| -> usize {
        plan.rects
            .iter()
            .map(|r| stadiums.iter().filter(|s| s.intersects_rect(r)).count())
            .sum()
    };
    if cost(&b) < cost(&a) {
        b
    } else {
        a
    }
}

struct SegEntry {
    trajectory: TrajectoryId,
    segment: usize,
    stadium: Stadium,
}

struct Builder<'a> {
    xi: usize,
    segments: &'a [SegEntry],
}

impl Builder<'_> {
    fn build_node(&self, region: Rect, endpoints: Vec<Point2>, segs: Vec<u32>, depth: usize) -> Node {
        let coincident = endpoints
            .windows(2)
            .all(|w| w[0] == w[1]);
        if endpoints.len() <= self.xi || depth >= MAX_DEPTH || coincident {
            return Node::Leaf {
                region,
                endpoint_count: endpoints.len(),
                runs: self.runs_for(&segs),
            };
        }

        let stadiums: Vec<Stadium> = segs
            .iter()
            .map(|&i| self.segments[i as usize].stadium)
            .collect();
        let plan = plan_split(&region, &endpoints, &stadiums);

        let mut child_points: [Vec<Point2>; 4] = Default::default();
        for p in endpoints {
            child_points[plan.child_of(p)].push(p);
        }

        let mut children: Vec<Node> = Vec::with_capacity(4);
        for (quadrant, points) in child_points.into_iter().enumerate() {
            let rect = plan.rects[quadrant];
            let child_segs: Vec<u32> = segs
                .iter()
                .copied()
                .filter(|&i| self.segments[i as usize].stadium.intersects_rect(&rect))
                .collect();
            children.push(self.build_node(rect, points, child_segs, depth + 1));
        }
        let children: [Node; 4] = children.try_into().expect("exactly four children");

        Node::Internal {
            region,
            children: Box::new(children),
        }
    }

    /// Group sorted (trajectory, segment) entries into maximal runs of
    /// consecutive segment indices.
    fn runs_for(&self, segs: &[u32]) -> Vec<SegmentRun> {
        let mut pairs: Vec<(TrajectoryId, usize)> = segs
            .iter()
            .map(|&i| {
                let e = &self.segments[i as usize];
                (e.trajectory, e.segment)
            })
            .collect();
        pairs.sort_unstable();
        let mut runs: Vec<SegmentRun> = Vec::new();
        for (trajectory, segment) in pairs {
            match runs.last_mut() {
                Some(run)
                    if run.trajectory == trajectory && segment <= run.last_segment + 1 =>
                {
                    run.last_segment = run.last_segment.max(segment);
                }
                _ => runs.push(SegmentRun {
                    trajectory,
                    first_segment: segment,
                    last_segment: segment,
                }),
            }
        }
        runs
    }
}

impl Quadtree {
    /// Build the index over a compressed dataset. An empty dataset (or
    /// one with no segments) yields a single empty leaf.
    pub fn build(dataset: &CompressedDataset, cfg: &IndexConfig) -> Self {
        let mut segments: Vec<SegEntry> = Vec::new();
        let mut endpoints: Vec<Point2> = Vec::new();
        for t in &dataset.trajectories {
            if t.segment_count() == 0 {
                continue;
            }
            for p in &t.retained {
                endpoints.push(p.position());
            }
            for s in 0..t.segment_count() {
                segments.push(SegEntry {
                    trajectory: t.id,
                    segment: s,
                    stadium: Stadium::new(t.segment(s), cfg.epsilon()),
                });
            }
        }

        let root = if endpoints.is_empty() {
            Node::Leaf {
                region: Rect::new(0.0, 0.0, 0.0, 0.0),
                runs: Vec::new(),
                endpoint_count: 0,
            }
        } else {
            let mut bounds = Rect::around_point(endpoints[0]);
            for p in &endpoints[1..] {
                bounds = bounds.union(&Rect::around_point(*p));
            }
            let region = bounds.expanded(cfg.epsilon());
            let builder = Builder {
                xi: cfg.xi(),
                segments: &segments,
            };
            let all: Vec<u32> = (0..segments.len() as u32).collect();
            builder.build_node(region, endpoints, all, 0)
        };

        Self {
            xi: cfg.xi(),
            epsilon: cfg.epsilon(),
            root,
        }
    }

    pub fn xi(&self) -> usize {
        self.xi
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Region covered by the root node.
    pub fn bounds(&self) -> Rect {
        *self.root.region()
    }

    /// Runs stored in leaves whose regions overlap `rect`, merged per
    /// trajectory into disjoint runs (FIFO traversal; the result is a
    /// set, so traversal order is immaterial).
    pub fn query_leaves(&self, rect: &Rect) -> Vec<SegmentRun> {
        let mut queue: VecDeque<&Node> = VecDeque::new();
        queue.push_back(&self.root);
        let mut collected: BTreeMap<TrajectoryId, Vec<(usize, usize)>> = BTreeMap::new();
        while let Some(node) = queue.pop_front() {
            if !node.region().intersects(rect) {
                continue;
            }
            match node {
                Node::Internal { children, .. } => {
                    for child in children.iter() {
                        queue.push_back(child);
                    }
                }
                Node::Leaf { runs, .. } => {
                    for run in runs {
                        collected
                            .entry(run.trajectory)
                            .or_default()
                            .push((run.first_segment, run.last_segment));
                    }
                }
            }
        }

        let mut merged: Vec<SegmentRun> = Vec::new();
        for (trajectory, mut spans) in collected {
            spans.sort_unstable();
            let mut iter = spans.into_iter();
            let mut current = iter.next().expect("non-empty per-trajectory spans");
            for (first, last) in iter {
                if first <= current.1 + 1 {
                    current.1 = current.1.max(last);
                } else {
                    merged.push(SegmentRun {
                        trajectory,
                        first_segment: current.0,
                        last_segment: current.1,
                    });
                    current = (first, last);
                }
            }
            merged.push(SegmentRun {
                trajectory,
                first_segment: current.0,
                last_segment: current.1,
            });
        }
        merged
    }

    /// Visit every leaf as (region, runs, endpoint_count, height).
    pub fn for_each_leaf<F: FnMut(&Rect, &[SegmentRun], usize, usize)>(&self, mut f: F) {
        fn walk<F: FnMut(&Rect, &[SegmentRun], usize, usize)>(
            node: &Node,
            height: usize,
            f: &mut F,
        ) {
            match node {
                Node::Internal { children, .. } => {
                    for child in children.iter() {
                        walk(child, height + 1, f);
                    }
                }
                Node::Leaf {
                    region,
                    runs,
                    endpoint_count,
                } => f(region, runs, *endpoint_count, height),
            }
        }
        walk(&self.root, 1, &mut f);
    }

    pub fn stats(&self) -> TreeStats {
        let mut leaf_count = 0usize;
        let mut min_h = usize::MAX;
        let mut max_h = 0usize;
        let mut sum_h = 0usize;
        let mut total_endpoints = 0usize;
        let mut max_endpoints = 0usize;
        self.for_each_leaf(|_, _, endpoints, height| {
            leaf_count += 1;
            min_h = min_h.min(height);
            max_h = max_h.max(height);
            sum_h += height;
            total_endpoints += endpoints;
            max_endpoints = max_endpoints.max(endpoints);
        });
        TreeStats {
            leaf_count,
            min_leaf_height: min_h,
            max_leaf_height: max_h,
            avg_leaf_height: sum_h as f64 / leaf_count as f64,
            total_endpoints,
            max_leaf_endpoints: max_endpoints,
        }
    }

    /// Verify that the children of every internal node tile its region
    /// exactly: shared split boundaries, outer edges matching the
    /// parent. Test support.
    pub fn partition_is_exact(&self) -> bool {
        fn check(node: &Node) -> bool {
            let Node::Internal { region, children } = node else {
                return true;
            };
            let rects: Vec<&Rect> = children.iter().map(|c| c.region()).collect();
            let area: f64 = rects.iter().map(|r| r.width() * r.height()).sum();
            let parent_area = region.width() * region.height();
            let union = rects
                .iter()
                .fold(None::<Rect>, |acc, r| {
                    Some(acc.map_or(**r, |a| a.union(r)))
                })
                .expect("four children");
            union == *region
                && (area - parent_area).abs() <= 1e-9 * parent_area.max(1.0)
                && children.iter().all(check)
        }
        check(&self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{compress_dataset, CompressionConfig};
    use crate::model::{RawTrajectory, TrajectoryPoint};
    use alloc::vec;

    fn raw(id: u64, pts: &[(f64, f64)]) -> RawTrajectory {
        let points = pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| TrajectoryPoint::new(x, y, i as f64))
            .collect();
        RawTrajectory::new(TrajectoryId(id), points).unwrap()
    }

    fn dataset(raws: &[RawTrajectory], eps: f64) -> CompressedDataset {
        compress_dataset(raws, &CompressionConfig::new(eps).unwrap()).0
    }

    #[test]
    fn config_validation() {
        assert!(IndexConfig::new(0, 1.0).is_err());
        assert!(IndexConfig::new(4, 0.0).is_err());
        assert!(IndexConfig::new(4, 1.0).is_ok());
    }

    #[test]
    fn tiny_dataset_is_single_leaf() {
        let r = raw(1, &[(0.0, 0.0), (5.0, 5.0), (10.0, 0.0)]);
        let ds = dataset(core::slice::from_ref(&r), 0.1);
        assert_eq!(ds.trajectories[0].segment_count(), 2);
        let tree = Quadtree::build(&ds, &IndexConfig::new(10, 0.1).unwrap());
        let stats = tree.stats();
        assert_eq!(stats.leaf_count, 1);
        assert_eq!(stats.min_leaf_height, 1);
        assert_eq!(stats.max_leaf_height, 1);
        assert_eq!(stats.avg_leaf_height, 1.0);
        // One run covering both segments.
        let runs = tree.query_leaves(&tree.bounds());
        assert_eq!(
            runs,
            vec![SegmentRun {
                trajectory: TrajectoryId(1),
                first_segment: 0,
                last_segment: 1
            }]
        );
    }

    #[test]
    fn square_corners_split_payloads_match_brute_force() {
        let r = raw(1, &[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]);
        let eps = 0.5;
        let ds = dataset(core::slice::from_ref(&r), eps);
        assert_eq!(ds.trajectories[0].retained.len(), 4);
        let tree = Quadtree::build(&ds, &IndexConfig::new(1, eps).unwrap());
        assert!(tree.partition_is_exact());

        let t = &ds.trajectories[0];
        tree.for_each_leaf(|region, runs, _, _| {
            let mut expected: Vec<usize> = (0..t.segment_count())
                .filter(|&s| Stadium::new(t.segment(s), eps).intersects_rect(region))
                .collect();
            expected.sort_unstable();
            let mut got: Vec<usize> = runs.iter().flat_map(|r| r.segments()).collect();
            got.sort_unstable();
            assert_eq!(got, expected, "payload mismatch in leaf {region:?}");
        });
    }

    #[test]
    fn coincident_endpoints_terminate() {
        // Identical positions (distinct timestamps) cannot be separated
        // by any split; the coincidence guard must stop the recursion.
        let nearly = raw(1, &[(5.0, 5.0), (5.0, 5.0 + 1e-15)]);
        let identical = RawTrajectory::new(
            TrajectoryId(2),
            vec![
                TrajectoryPoint::new(5.0, 5.0, 0.0),
                TrajectoryPoint::new(5.0, 5.0, 1.0),
            ],
        )
        .unwrap();
        let ds = dataset(&[nearly, identical], 0.1);
        let tree = Quadtree::build(&ds, &IndexConfig::new(1, 0.1).unwrap());
        assert!(tree.stats().max_leaf_height <= MAX_DEPTH + 1);
    }

    #[test]
    fn split_median_rule_even_count() {
        // Lower median of {0,1,2,3} is 1; points on the line go left.
        let region = Rect::new(0.0, 0.0, 3.0, 1.0);
        let endpoints = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(3.0, 0.0),
        ];
        let plan = plan_split(&region, &endpoints, &[]);
        assert!(plan.vertical_first);
        assert_eq!(plan.primary_split, 1.0);
        let left: Vec<_> = endpoints
            .iter()
            .filter(|p| plan.child_of(**p) < 2)
            .collect();
        assert_eq!(left.len(), 2);
        assert!(left.iter().all(|p| p.x <= 1.0));
    }

    #[test]
    fn split_tie_prefers_vertical_first() {
        // Symmetric under x/y swap: both ways cost the same.
        let region = Rect::new(0.0, 0.0, 10.0, 10.0);
        let endpoints = [
            Point2::new(2.0, 2.0),
            Point2::new(8.0, 8.0),
            Point2::new(2.0, 8.0),
            Point2::new(8.0, 2.0),
        ];
        let plan = plan_split(&region, &endpoints, &[]);
        assert!(plan.vertical_first);
    }

    #[test]
    fn split_empty_region_halves_evenly() {
        let region = Rect::new(0.0, 0.0, 4.0, 2.0);
        let plan = plan_split(&region, &[], &[]);
        assert_eq!(plan.primary_split, 2.0);
        assert_eq!(plan.secondary_splits, (1.0, 1.0));
    }

    #[test]
    fn query_disjoint_rect_is_empty() {
        let r = raw(1, &[(0.0, 0.0), (1.0, 1.0)]);
        let ds = dataset(core::slice::from_ref(&r), 0.1);
        let tree = Quadtree::build(&ds, &IndexConfig::new(4, 0.1).unwrap());
        assert!(tree
            .query_leaves(&Rect::new(100.0, 100.0, 101.0, 101.0))
            .is_empty());
    }

    #[test]
    fn query_merges_runs_per_trajectory() {
        // A long horizontal path split across many leaves must come back
        // as one run per trajectory when querying the whole bounds.
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| (i as f64, if i % 2 == 0 { 0.0 } else { 5.0 }))
            .collect();
        let r = raw(3, &pts);
        let ds = dataset(core::slice::from_ref(&r), 0.1);
        let tree = Quadtree::build(&ds, &IndexConfig::new(2, 0.1).unwrap());
        assert!(tree.stats().leaf_count > 1);
        let runs = tree.query_leaves(&tree.bounds());
        assert_eq!(
            runs,
            vec![SegmentRun {
                trajectory: TrajectoryId(3),
                first_segment: 0,
                last_segment: ds.trajectories[0].segment_count() - 1
            }]
        );
    }

    #[test]
    fn one_split_level_heights() {
        // 5 spread-out endpoints with xi = 4 force exactly one split.
        let r = raw(1, &[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0), (5.0, 5.0)]);
        let ds = dataset(core::slice::from_ref(&r), 0.01);
        let tree = Quadtree::build(&ds, &IndexConfig::new(4, 0.01).unwrap());
        let stats = tree.stats();
        assert_eq!(stats.leaf_count, 4);
        assert_eq!(stats.min_leaf_height, 2);
        assert_eq!(stats.max_leaf_height, 2);
    }

    #[test]
    fn empty_dataset_builds_empty_leaf() {
        let ds = CompressedDataset {
            epsilon: 0.1,
            sigma: 0.0,
            trajectories: vec![],
        };
        let tree = Quadtree::build(&ds, &IndexConfig::new(4, 0.1).unwrap());
        assert_eq!(tree.stats().leaf_count, 1);
        assert!(tree.query_leaves(&Rect::new(-1.0, -1.0, 1.0, 1.0)).is_empty());
    }
}
