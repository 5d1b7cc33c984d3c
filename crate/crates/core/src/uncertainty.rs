//! Where discarded points can hide, and how likely they were seen.
//!
//! Each compressed segment guarantees only that its discarded points lie
//! within `epsilon` of it, a stadium-shaped region ([`Stadium`]). To
//! estimate the probability that at least one of `n_d` discarded points
//! fell inside a query rectangle, offsets are drawn from a zero-mean
//! Gaussian (resampling anything beyond `epsilon`), one point is placed
//! uniformly by arc length on the level curve at each offset, and the
//! hit rate is lifted to `1 - (1 - rate)^n_d`.
//!
//! All sampling is seeded; identical seeds reproduce identical draws,
//! which the query engine leans on for its index/linear equivalence.

use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{
    segment_distance, segment_rect_distance, GeometryError, Point2, Rect, Segment2, Vec2,
};

/// The region of all points within `radius` of a segment: two parallel
/// sides plus two semicircular caps (a disc, for a degenerate segment).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stadium {
    pub segment: Segment2,
    pub radius: f64,
}

impl Stadium {
    pub fn new(segment: Segment2, radius: f64) -> Self {
        Self { segment, radius }
    }

    /// Membership is exactly `segment_distance(p) <= radius`.
    pub fn contains(&self, p: Point2) -> bool {
        segment_distance(p, self.segment) <= self.radius
    }

    /// Exact stadium/rectangle overlap: the segment passes within
    /// `radius` of the rectangle. Touching counts.
    pub fn intersects_rect(&self, rect: &Rect) -> bool {
        segment_rect_distance(self.segment, rect) <= self.radius
    }

    /// Tight axis-aligned bounding rectangle.
    pub fn bounding_rect(&self) -> Rect {
        self.segment.bounding_rect().expanded(self.radius)
    }
}

/// Monte-Carlo sampling parameters. `sigma` is the Gaussian spread of
/// discarded-point deviations (the dataset-level RMS recorded at
/// compression time); `n_samples` points are drawn per segment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplerConfig {
    pub sigma: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Default number of sampled points per segment.
pub const DEFAULT_SAMPLE_COUNT: usize = 15;

impl SamplerConfig {
    pub fn new(sigma: f64, n_samples: usize, seed: u64) -> Self {
        debug_assert!(sigma >= 0.0 && n_samples >= 1);
        Self {
            sigma,
            n_samples,
            seed,
        }
    }

    /// Same configuration with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministically derive a sub-seed from a master seed and a stream
/// of context values (query index, trajectory id, segment index, ...).
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = mix64(master ^ 0x9e37_79b9_7f4a_7c15);
    for &p in parts {
        h = mix64(h.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(p));
    }
    h
}

/// Draw `|N(0, sigma)|`, resampling until the value is at most
/// `epsilon`. With `sigma = 0` every draw is zero.
pub fn sample_offset_magnitude<R: Rng + ?Sized>(rng: &mut R, sigma: f64, epsilon: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is non-negative and finite");
    loop {
        let rd = libm::fabs(normal.sample(rng));
        if rd <= epsilon {
            return rd;
        }
    }
}

/// A point uniform by arc length on the level curve
/// `{ p : segment_distance(p, seg) = rd }`: the stadium boundary at
/// offset `rd`, degenerating to the segment itself at `rd = 0`.
pub fn sample_offset_point<R: Rng + ?Sized>(
    seg: Segment2,
    rd: f64,
    rng: &mut R,
) -> Result<Point2, GeometryError> {
    if seg.is_degenerate() {
        return Err(GeometryError::DegenerateSegment);
    }
    let length = seg.length();
    let cap = PI * rd;
    let perimeter = 2.0 * length + 2.0 * cap;
    let u = rng.random_range(0.0..perimeter);

    let dir = seg.delta().scale(1.0 / length);
    let normal = Vec2::new(-dir.y, dir.x);
    let theta = dir.angle();

    let p = if u < length {
        seg.at(u / length).translate(normal.scale(rd))
    } else if u < length + cap {
        let psi = theta - 0.5 * PI + (u - length) / cap * PI;
        ring_point(seg.end, rd, psi)
    } else if u < 2.0 * length + cap {
        let t = (u - length - cap) / length;
        seg.at(1.0 - t).translate(normal.scale(-rd))
    } else {
        let psi = theta + 0.5 * PI + (u - 2.0 * length - cap) / cap * PI;
        ring_point(seg.start, rd, psi)
    };
    Ok(p)
}

fn ring_point(center: Point2, radius: f64, angle: f64) -> Point2 {
    center.translate(Vec2::new(libm::cos(angle), libm::sin(angle)).scale(radius))
}

/// `1 - (1 - rate)^n`: the chance that at least one of `n` independent
/// trials with per-trial probability `rate` succeeds.
pub fn lift_probability(rate: f64, n: u64) -> f64 {
    match n {
        0 => 0.0,
        1 => rate,
        _ => 1.0 - libm::pow(1.0 - rate, n as f64),
    }
}

/// Estimated probability that at least one of `n_discarded` points
/// belonging to `seg` falls inside `region`.
///
/// Draws `cfg.n_samples` bounded Gaussian offsets, places one point per
/// offset on the corresponding level curve, counts hits and lifts the
/// rate by the number of discarded points. A segment with nothing
/// discarded contributes zero. For a degenerate segment the level curve
/// is the circle of radius `rd` around the point.
pub fn estimate_segment_probability(
    seg: Segment2,
    region: &Rect,
    epsilon: f64,
    n_discarded: u64,
    cfg: &SamplerConfig,
) -> f64 {
    if n_discarded == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut hits = 0usize;
    for _ in 0..cfg.n_samples {
        let rd = sample_offset_magnitude(&mut rng, cfg.sigma, epsilon);
        let p = if seg.is_degenerate() {
            ring_point(seg.start, rd, rng.random_range(-PI..PI))
        } else {
            sample_offset_point(seg, rd, &mut rng).expect("segment is non-degenerate")
        };
        if region.contains(p) {
            hits += 1;
        }
    }
    lift_probability(hits as f64 / cfg.n_samples as f64, n_discarded)
}

/// `1 - Π(1 - r_i)`: probability that at least one segment of a
/// trajectory had a discarded point in the region, assuming independent
/// per-segment estimates.
pub fn compose_trajectory_probability<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    let mut miss = 1.0f64;
    for r in probs {
        miss *= 1.0 - r;
    }
    1.0 - miss
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn seg(a: (f64, f64), b: (f64, f64)) -> Segment2 {
        Segment2::new(pt(a.0, a.1), pt(b.0, b.1))
    }

    #[test]
    fn stadium_rect_overlap() {
        let s = Stadium::new(seg((0.0, 0.0), (4.0, 0.0)), 1.0);
        assert!(s.intersects_rect(&Rect::new(1.0, 0.5, 2.0, 2.0)));
        assert!(!s.intersects_rect(&Rect::new(0.0, 2.01, 4.0, 3.0)));
        // Touching the cap at exactly radius distance counts.
        assert!(s.intersects_rect(&Rect::new(5.0, 0.0, 6.0, 1.0)));
    }

    #[test]
    fn stadium_membership_is_segment_distance() {
        let s = Stadium::new(seg((0.0, 0.0), (4.0, 0.0)), 1.0);
        assert!(s.contains(pt(2.0, 1.0)));
        assert!(s.contains(pt(-0.5, 0.0)));
        assert!(!s.contains(pt(2.0, 1.0001)));
        assert!(!s.contains(pt(5.1, 0.0)));
    }

    #[test]
    fn offset_point_sits_on_level_curve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = seg((1.0, -2.0), (4.0, 2.0));
        for rd in [0.0, 0.3, 1.0] {
            for _ in 0..2000 {
                let p = sample_offset_point(s, rd, &mut rng).unwrap();
                assert!(
                    (segment_distance(p, s) - rd).abs() <= 1e-9,
                    "offset {rd} missed"
                );
            }
        }
    }

    #[test]
    fn offset_point_rejects_degenerate_segment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = seg((1.0, 1.0), (1.0, 1.0));
        assert_eq!(
            sample_offset_point(z, 0.5, &mut rng),
            Err(GeometryError::DegenerateSegment)
        );
    }

    #[test]
    fn cap_fraction_matches_perimeter_split() {
        // Fraction of samples on the caps = cap length / total length.
        let s = seg((0.0, 0.0), (2.0, 0.0));
        let rd = 0.5;
        let expected = (2.0 * PI * rd) / (2.0 * 2.0 + 2.0 * PI * rd);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let mut on_cap = 0usize;
        for _ in 0..n {
            let p = sample_offset_point(s, rd, &mut rng).unwrap();
            // A sample is on a cap iff its perpendicular foot falls off
            // the segment.
            let d = s.delta();
            let off_segment = s.start.to(p).dot(d) < 0.0 || p.to(s.end).dot(d) < 0.0;
            if off_segment {
                on_cap += 1;
            }
        }
        let frac = on_cap as f64 / n as f64;
        assert!(
            (frac - expected).abs() < 0.02,
            "cap fraction {frac} vs expected {expected}"
        );
    }

    #[test]
    fn offset_magnitude_respects_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20_000 {
            let rd = sample_offset_magnitude(&mut rng, 0.8, 0.5);
            assert!((0.0..=0.5).contains(&rd));
        }
        assert_eq!(sample_offset_magnitude(&mut rng, 0.0, 0.5), 0.0);
    }

    #[test]
    fn lift_probability_arithmetic() {
        assert_eq!(lift_probability(0.5, 2), 0.75);
        assert_eq!(lift_probability(0.0, 7), 0.0);
        assert_eq!(lift_probability(1.0, 5), 1.0);
        assert_eq!(lift_probability(0.3, 1), 0.3);
        assert_eq!(lift_probability(0.9, 0), 0.0);
    }

    #[test]
    fn estimate_trivial_regions() {
        let s = seg((0.0, 0.0), (4.0, 0.0));
        let cfg = SamplerConfig::new(0.3, 200, 42);
        // Disjoint from the stadium entirely.
        let far = Rect::new(10.0, 10.0, 11.0, 11.0);
        assert_eq!(estimate_segment_probability(s, &far, 1.0, 5, &cfg), 0.0);
        // Covering the whole stadium.
        let all = Rect::new(-2.0, -2.0, 6.0, 2.0);
        assert_eq!(estimate_segment_probability(s, &all, 1.0, 5, &cfg), 1.0);
        // Nothing discarded: zero regardless of geometry.
        assert_eq!(estimate_segment_probability(s, &all, 1.0, 0, &cfg), 0.0);
    }

    #[test]
    fn estimate_sigma_zero_samples_on_segment() {
        let s = seg((0.0, 0.0), (4.0, 0.0));
        let cfg = SamplerConfig::new(0.0, 50, 7);
        // A sliver around the segment itself catches every sample.
        let sliver = Rect::new(-0.1, -1e-12, 4.1, 1e-12);
        assert_eq!(estimate_segment_probability(s, &sliver, 1.0, 3, &cfg), 1.0);
    }

    #[test]
    fn estimate_is_deterministic_and_monotone_in_region() {
        let s = seg((0.0, 0.0), (4.0, 0.0));
        let cfg = SamplerConfig::new(0.4, 500, 1234);
        let small = Rect::new(1.0, -0.5, 2.0, 0.5);
        let big = Rect::new(0.0, -1.0, 3.0, 1.0);
        let p_small = estimate_segment_probability(s, &small, 1.0, 3, &cfg);
        let p_small2 = estimate_segment_probability(s, &small, 1.0, 3, &cfg);
        let p_big = estimate_segment_probability(s, &big, 1.0, 3, &cfg);
        assert_eq!(p_small, p_small2);
        // Same seed means shared draws, so nesting is exact.
        assert!(p_small <= p_big);
    }

    #[test]
    fn compose_probabilities() {
        assert_eq!(compose_trajectory_probability([0.5, 0.5]), 0.75);
        assert_eq!(compose_trajectory_probability([0.0, 0.0, 0.0]), 0.0);
        assert_eq!(compose_trajectory_probability([1.0, 0.2]), 1.0);
        assert_eq!(compose_trajectory_probability([]), 0.0);
        // Permutation invariance.
        let a = compose_trajectory_probability([0.1, 0.4, 0.7]);
        let b = compose_trajectory_probability([0.7, 0.1, 0.4]);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn derived_seeds_differ_per_context() {
        let a = derive_seed(1, &[0, 0, 0]);
        let b = derive_seed(1, &[0, 0, 1]);
        let c = derive_seed(2, &[0, 0, 0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, &[0, 0, 0]));
    }
}
