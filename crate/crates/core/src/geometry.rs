//! Planar geometric primitives.
//!
//! Distances come in two flavours: [`perpendicular_distance`] measures a
//! point against the infinite carrier line of a segment, while
//! [`segment_distance`] measures against the segment itself, falling back
//! to the nearer endpoint when the perpendicular foot lies off-segment.
//! The compressor is built on [`CandidateRegion`]: the intersection of
//! tangent wedges around a shared anchor, minus a growing excluded disc.
//! A point inside the region certifies that the segment from the anchor
//! to that point passes within `epsilon` of every point folded into the
//! region so far.
//!
//! All angles are radians; wedges are kept as (center, half-width) pairs
//! so that intersection is robust across the ±π seam.

use core::f64::consts::{PI, TAU};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Errors from geometric preconditions.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    /// An operation that needs a carrier line got a zero-length segment.
    #[error("degenerate segment: start equals end")]
    DegenerateSegment,
    /// A tangent wedge was requested from a point on or inside the disc.
    #[error("anchor too close to disc center: distance {distance} <= radius {radius}")]
    AnchorInsideDisc { distance: f64, radius: f64 },
}

/// A planar point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Vector from `self` to `other`.
    #[inline]
    pub fn to(&self, other: Point2) -> Vec2 {
        Vec2 {
            x: other.x - self.x,
            y: other.y - self.y,
        }
    }

    #[inline]
    pub fn distance(&self, other: Point2) -> f64 {
        self.to(other).norm()
    }

    #[inline]
    pub fn translate(&self, v: Vec2) -> Point2 {
        Point2::new(self.x + v.x, self.y + v.y)
    }
}

/// A planar vector (difference of points).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(&self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; signed parallelogram area.
    #[inline]
    pub fn cross(&self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(*self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    /// Direction angle in (-π, π], via `atan2`.
    #[inline]
    pub fn angle(&self) -> f64 {
        libm::atan2(self.y, self.x)
    }

    #[inline]
    pub fn scale(&self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// A directed line segment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Segment2 {
    pub start: Point2,
    pub end: Point2,
}

impl Segment2 {
    #[inline]
    pub fn new(start: Point2, end: Point2) -> Self {
        Self { start, end }
    }

    #[inline]
    pub fn delta(&self) -> Vec2 {
        self.start.to(self.end)
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.delta().norm()
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.start == self.end
    }

    /// Point at parameter `t` (0 = start, 1 = end).
    #[inline]
    pub fn at(&self, t: f64) -> Point2 {
        self.start.translate(self.delta().scale(t))
    }

    /// Tight axis-aligned bounding rectangle.
    pub fn bounding_rect(&self) -> Rect {
        Rect {
            min_x: self.start.x.min(self.end.x),
            min_y: self.start.y.min(self.end.y),
            max_x: self.start.x.max(self.end.x),
            max_y: self.start.y.max(self.end.y),
        }
    }
}

/// A disc given by center and radius. Radius is expected positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

impl Disc {
    #[inline]
    pub fn new(center: Point2, radius: f64) -> Self {
        debug_assert!(radius > 0.0, "disc radius must be positive");
        Self { center, radius }
    }
}

/// An axis-aligned rectangle, closed on all edges.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    #[inline]
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        debug_assert!(min_x <= max_x && min_y <= max_y, "inverted rectangle");
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    /// Rectangle spanned by two arbitrary corner points.
    pub fn from_corners(a: Point2, b: Point2) -> Self {
        Self {
            min_x: a.x.min(b.x),
            min_y: a.y.min(b.y),
            max_x: a.x.max(b.x),
            max_y: a.y.max(b.y),
        }
    }

    /// Degenerate rectangle covering a single point.
    pub fn around_point(p: Point2) -> Self {
        Self::new(p.x, p.y, p.x, p.y)
    }

    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        self.min_x <= p.x && p.x <= self.max_x && self.min_y <= p.y && p.y <= self.max_y
    }

    /// Closed-rectangle overlap test (shared boundaries count).
    #[inline]
    pub fn intersects(&self, other: &Rect) -> bool {
        !(other.max_x < self.min_x
            || other.min_x > self.max_x
            || other.max_y < self.min_y
            || other.min_y > self.max_y)
    }

    /// True iff `other` lies entirely inside `self`.
    #[inline]
    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.min_x <= other.min_x
            && other.max_x <= self.max_x
            && self.min_y <= other.min_y
            && other.max_y <= self.max_y
    }

    /// Grow each edge outward by `margin`.
    pub fn expanded(&self, margin: f64) -> Rect {
        Rect {
            min_x: self.min_x - margin,
            min_y: self.min_y - margin,
            max_x: self.max_x + margin,
            max_y: self.max_y + margin,
        }
    }

    /// Smallest rectangle covering both operands.
    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }

    /// Distance from a point to the rectangle (0 inside).
    pub fn distance_to_point(&self, p: Point2) -> f64 {
        let dx = (self.min_x - p.x).max(0.0).max(p.x - self.max_x);
        let dy = (self.min_y - p.y).max(0.0).max(p.y - self.max_y);
        libm::hypot(dx, dy)
    }

    /// The four edges as segments (bottom, right, top, left).
    pub fn edges(&self) -> [Segment2; 4] {
        let bl = Point2::new(self.min_x, self.min_y);
        let br = Point2::new(self.max_x, self.min_y);
        let tr = Point2::new(self.max_x, self.max_y);
        let tl = Point2::new(self.min_x, self.max_y);
        [
            Segment2::new(bl, br),
            Segment2::new(br, tr),
            Segment2::new(tr, tl),
            Segment2::new(tl, bl),
        ]
    }
}

/// Perpendicular distance from `m` to the infinite line through `seg`.
///
/// Fails on a zero-length segment, which has no carrier line.
pub fn perpendicular_distance(m: Point2, seg: Segment2) -> Result<f64, GeometryError> {
    if seg.is_degenerate() {
        return Err(GeometryError::DegenerateSegment);
    }
    let d = seg.delta();
    let cross = seg.start.to(m).cross(d);
    Ok(libm::fabs(cross) / d.norm())
}

/// Euclidean distance from `m` to the segment itself.
///
/// When the perpendicular foot of `m` falls on the segment this equals
/// [`perpendicular_distance`]; otherwise it is the distance to the nearer
/// endpoint. A zero-length segment degenerates to point distance.
pub fn segment_distance(m: Point2, seg: Segment2) -> f64 {
    if seg.is_degenerate() {
        return seg.start.distance(m);
    }
    let d = seg.delta();
    let foot_on_segment = seg.start.to(m).dot(d) >= 0.0 && m.to(seg.end).dot(d) >= 0.0;
    if foot_on_segment {
        libm::fabs(seg.start.to(m).cross(d)) / d.norm()
    } else {
        seg.start.distance(m).min(seg.end.distance(m))
    }
}

/// True iff the segment passes within `disc.radius` of `disc.center`,
/// i.e. [`segment_distance`]`(center, seg) <= radius`. Touching counts.
pub fn segment_intersects_disc(seg: Segment2, disc: &Disc) -> bool {
    segment_distance(disc.center, seg) <= disc.radius
}

/// True iff the two closed segments share at least one point.
pub fn segments_intersect(a: Segment2, b: Segment2) -> bool {
    let da = a.delta();
    let db = b.delta();
    let d1 = da.cross(a.start.to(b.start));
    let d2 = da.cross(a.start.to(b.end));
    let d3 = db.cross(b.start.to(a.start));
    let d4 = db.cross(b.start.to(a.end));

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }

    // Collinear / touching cases: an endpoint lies on the other segment.
    (d1 == 0.0 && on_segment(a, b.start))
        || (d2 == 0.0 && on_segment(a, b.end))
        || (d3 == 0.0 && on_segment(b, a.start))
        || (d4 == 0.0 && on_segment(b, a.end))
}

fn on_segment(seg: Segment2, p: Point2) -> bool {
    p.x >= seg.start.x.min(seg.end.x)
        && p.x <= seg.start.x.max(seg.end.x)
        && p.y >= seg.start.y.min(seg.end.y)
        && p.y <= seg.start.y.max(seg.end.y)
}

/// Minimum distance between two closed segments (0 when they intersect).
pub fn segment_segment_distance(a: Segment2, b: Segment2) -> f64 {
    if a.is_degenerate() {
        return segment_distance(a.start, b);
    }
    if b.is_degenerate() {
        return segment_distance(b.start, a);
    }
    if segments_intersect(a, b) {
        return 0.0;
    }
    segment_distance(b.start, a)
        .min(segment_distance(b.end, a))
        .min(segment_distance(a.start, b))
        .min(segment_distance(a.end, b))
}

/// Minimum distance from a segment to a rectangle (0 when they overlap).
pub fn segment_rect_distance(seg: Segment2, rect: &Rect) -> f64 {
    if rect.contains(seg.start) || rect.contains(seg.end) {
        return 0.0;
    }
    if rect.min_x == rect.max_x && rect.min_y == rect.max_y {
        return segment_distance(Point2::new(rect.min_x, rect.min_y), seg);
    }
    let mut best = f64::INFINITY;
    for edge in rect.edges() {
        let d = segment_segment_distance(seg, edge);
        if d == 0.0 {
            return 0.0;
        }
        best = best.min(d);
    }
    best
}

/// Normalize an angle into (-π, π].
#[inline]
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = libm::fmod(a, TAU);
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// A closed angular interval on the circle, stored as center direction
/// plus half-width so that intersection survives the ±π seam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wedge {
    center: f64,
    half_width: f64,
}

impl Wedge {
    /// Wedge of directions `[center - half_width, center + half_width]`.
    pub fn new(center: f64, half_width: f64) -> Self {
        debug_assert!((0.0..=PI).contains(&half_width));
        Self {
            center: normalize_angle(center),
            half_width,
        }
    }

    /// The full circle of directions.
    pub fn full() -> Self {
        Self {
            center: 0.0,
            half_width: PI,
        }
    }

    pub fn is_full(&self) -> bool {
        self.half_width >= PI
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width
    }

    /// Lower bound direction (may fall below -π; pair with
    /// [`normalize_angle`] when a canonical value is needed).
    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    /// Upper bound direction (may exceed π).
    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    /// Closed containment of a direction angle.
    pub fn contains(&self, angle: f64) -> bool {
        libm::fabs(normalize_angle(angle - self.center)) <= self.half_width
    }

    /// Intersection of two wedges, `None` when disjoint.
    ///
    /// Exact when either operand is the full circle or when both widths
    /// are at most a half-circle; wider pairs can intersect in two arcs,
    /// which never arises here (tangent wedges are narrower than π).
    pub fn intersect(&self, other: &Wedge) -> Option<Wedge> {
        if self.is_full() {
            return Some(*other);
        }
        if other.is_full() {
            return Some(*self);
        }
        let offset = normalize_angle(other.center - self.center);
        let lo = (-self.half_width).max(offset - other.half_width);
        let hi = self.half_width.min(offset + other.half_width);
        if lo > hi {
            None
        } else {
            Some(Wedge::new(
                self.center + 0.5 * (lo + hi),
                0.5 * (hi - lo),
            ))
        }
    }
}

/// Wedge of directions from `anchor` along which a ray passes within
/// `radius` of `target`: the two tangent rays from `anchor` to the disc
/// around `target` bound it. Requires `anchor` strictly outside the disc.
pub fn tangent_wedge(anchor: Point2, target: Point2, radius: f64) -> Result<Wedge, GeometryError> {
    let v = anchor.to(target);
    let dist = v.norm();
    if dist <= radius {
        return Err(GeometryError::AnchorInsideDisc {
            distance: dist,
            radius,
        });
    }
    Ok(Wedge::new(v.angle(), libm::asin(radius / dist)))
}

/// The running intersection of tangent wedges from a fixed anchor,
/// excluding the disc of radius `min_radius` (the farthest accepted
/// point so far). Containment of a probe point certifies that the
/// segment anchor→probe passes within `epsilon` of every updated point:
/// the wedge keeps the ray within `epsilon`, and `min_radius` guarantees
/// each perpendicular foot lands inside the segment.
#[derive(Debug, Clone, Copy)]
pub struct CandidateRegion {
    anchor: Point2,
    wedge: Wedge,
    min_radius: f64,
    empty: bool,
}

impl CandidateRegion {
    /// Fresh unconstrained region: full wedge, zero excluded radius.
    pub fn new(anchor: Point2) -> Self {
        Self {
            anchor,
            wedge: Wedge::full(),
            min_radius: 0.0,
            empty: false,
        }
    }

    pub fn anchor(&self) -> Point2 {
        self.anchor
    }

    pub fn wedge(&self) -> &Wedge {
        &self.wedge
    }

    pub fn min_radius(&self) -> f64 {
        self.min_radius
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Narrow the region by the tangent wedge of `point` and raise the
    /// excluded radius to its distance. `point` must be farther than
    /// `epsilon` from the anchor. Updating an already-empty region keeps
    /// it empty.
    pub fn update(&mut self, point: Point2, epsilon: f64) -> Result<(), GeometryError> {
        let w = tangent_wedge(self.anchor, point, epsilon)?;
        self.min_radius = self.min_radius.max(self.anchor.distance(point));
        if self.empty {
            return Ok(());
        }
        match self.wedge.intersect(&w) {
            Some(next) => self.wedge = next,
            None => self.empty = true,
        }
        Ok(())
    }

    /// True iff `p` is inside the wedge and strictly beyond the excluded
    /// disc. A fresh region (zero radius) contains every point, the
    /// anchor included by convention.
    pub fn contains(&self, p: Point2) -> bool {
        if self.empty {
            return false;
        }
        let radius_ok = if self.min_radius == 0.0 {
            true
        } else {
            self.anchor.distance(p) > self.min_radius
        };
        if !radius_ok {
            return false;
        }
        self.wedge.is_full() || self.wedge.contains(self.anchor.to(p).angle())
    }
}
