//! Trajectory data model: timestamped raw trajectories and their
//! compressed form (retained points plus per-segment discarded counts).

use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{Point2, Rect, Segment2};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Validation errors raised at the trajectory construction boundary.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("trajectory {id} is empty")]
    EmptyTrajectory { id: TrajectoryId },
    #[error("trajectory {id}: non-finite coordinate at point {index}")]
    NonFiniteCoordinate { id: TrajectoryId, index: usize },
    #[error("trajectory {id}: timestamps not strictly increasing at point {index}")]
    NonMonotoneTimestamps { id: TrajectoryId, index: usize },
    #[error(
        "trajectory {id}: retained points and discarded counts disagree \
         ({retained} retained, {counts} counts)"
    )]
    CountMismatch {
        id: TrajectoryId,
        retained: usize,
        counts: usize,
    },
}

/// Dataset-unique trajectory identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct TrajectoryId(pub u64);

impl fmt::Display for TrajectoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A position sample: planar coordinates plus a timestamp in seconds.
/// Timestamps must increase strictly within a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TrajectoryPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl TrajectoryPoint {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    #[inline]
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// An uncompressed trajectory: at least one point, strictly increasing
/// timestamps, finite coordinates. Validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrajectory {
    id: TrajectoryId,
    points: Vec<TrajectoryPoint>,
}

impl RawTrajectory {
    pub fn new(id: TrajectoryId, points: Vec<TrajectoryPoint>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::EmptyTrajectory { id });
        }
        for (index, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.t.is_finite()) {
                return Err(ModelError::NonFiniteCoordinate { id, index });
            }
            if index > 0 && points[index - 1].t >= p.t {
                return Err(ModelError::NonMonotoneTimestamps { id, index });
            }
        }
        Ok(Self { id, points })
    }

    pub fn id(&self) -> TrajectoryId {
        self.id
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A compressed trajectory: the retained subsequence of the raw points,
/// one discarded-point count per segment, and the error bound it was
/// built with.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CompressedTrajectory {
    pub id: TrajectoryId,
    pub retained: Vec<TrajectoryPoint>,
    /// Discarded raw points strictly between segment endpoints; one entry
    /// per segment, so `discarded_counts.len() == retained.len() - 1`.
    pub discarded_counts: Vec<u64>,
    pub epsilon: f64,
}

impl CompressedTrajectory {
    pub fn new(
        id: TrajectoryId,
        retained: Vec<TrajectoryPoint>,
        discarded_counts: Vec<u64>,
        epsilon: f64,
    ) -> Result<Self, ModelError> {
        if retained.is_empty() {
            return Err(ModelError::EmptyTrajectory { id });
        }
        if discarded_counts.len() != retained.len() - 1 {
            return Err(ModelError::CountMismatch {
                id,
                retained: retained.len(),
                counts: discarded_counts.len(),
            });
        }
        Ok(Self {
            id,
            retained,
            discarded_counts,
            epsilon,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.retained.len().saturating_sub(1)
    }

    /// The `i`-th compressed segment.
    pub fn segment(&self, i: usize) -> Segment2 {
        Segment2::new(self.retained[i].position(), self.retained[i + 1].position())
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment2> + '_ {
        (0..self.segment_count()).map(move |i| self.segment(i))
    }

    /// Number of points in the raw trajectory this was built from.
    pub fn raw_point_count(&self) -> u64 {
        self.retained.len() as u64 + self.discarded_counts.iter().sum::<u64>()
    }

    /// Raw index of the `k`-th retained point, reconstructed from the
    /// discarded counts.
    pub fn raw_index_of_retained(&self, k: usize) -> usize {
        let skipped: u64 = self.discarded_counts[..k].iter().sum();
        k + skipped as usize
    }
}

/// A compressed dataset plus the statistics the query machinery needs:
/// the shared error bound and the deviation spread of discarded points.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedDataset {
    pub epsilon: f64,
    /// Root-mean-square deviation of all discarded points in the dataset,
    /// taken around zero; drives the Gaussian offset sampler.
    pub sigma: f64,
    pub trajectories: Vec<CompressedTrajectory>,
}

impl CompressedDataset {
    pub fn trajectory_count(&self) -> usize {
        self.trajectories.len()
    }

    pub fn total_raw_points(&self) -> u64 {
        self.trajectories.iter().map(|t| t.raw_point_count()).sum()
    }

    pub fn total_retained_points(&self) -> u64 {
        self.trajectories.iter().map(|t| t.retained.len() as u64).sum()
    }

    /// Bounding rectangle of all retained points, `None` when empty.
    pub fn bounding_rect(&self) -> Option<Rect> {
        let mut rect: Option<Rect> = None;
        for t in &self.trajectories {
            for p in &t.retained {
                let r = Rect::around_point(p.position());
                rect = Some(match rect {
                    Some(acc) => acc.union(&r),
                    None => r,
                });
            }
        }
        rect
    }
}

/// Bounding rectangle of a set of raw trajectories, `None` when empty.
pub fn raw_bounding_rect(trajectories: &[RawTrajectory]) -> Option<Rect> {
    let mut rect: Option<Rect> = None;
    for t in trajectories {
        for p in t.points() {
            let r = Rect::around_point(p.position());
            rect = Some(match rect {
                Some(acc) => acc.union(&r),
                None => r,
            });
        }
    }
    rect
}
