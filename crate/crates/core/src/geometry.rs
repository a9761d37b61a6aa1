//! Planar primitives: points, polylines with cached arc-length, projection,
//! containment and heading helpers.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default backward-scan threshold for [`heading_at_end`], in meters.
pub const DEFAULT_HEADING_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    /// Heading of this vector in `(-pi, pi]`.
    #[inline]
    pub fn heading(self) -> T {
        let h = self.y.atan2(self.x);
        if h == -T::PI() {
            T::PI()
        } else {
            h
        }
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: T) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

/// Polyline with at least two points and cached cumulative arc-length.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline<T> {
    points: Vec<Point2<T>>,
    cumulative: Vec<T>,
}

impl<T: Scalar> Polyline<T> {
    pub fn new(points: Vec<Point2<T>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinitePoint { index });
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(T::zero());
        let mut total = T::zero();
        for (i, w) in points.windows(2).enumerate() {
            let step = w[0].distance(w[1]);
            if step < T::tolerance() {
                return Err(Error::DuplicatePoint { index: i + 1 });
            }
            total = total + step;
            cumulative.push(total);
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    pub fn cumulative_arclength(&self) -> &[T] {
        &self.cumulative
    }

    pub fn length(&self) -> T {
        *self.cumulative.last().expect("polyline has points")
    }

    pub fn first(&self) -> Point2<T> {
        self.points[0]
    }

    pub fn last(&self) -> Point2<T> {
        *self.points.last().expect("polyline has points")
    }

    /// Index of the segment holding arc-length `s`. Interior vertices belong
    /// to the following segment; `s` at or past the end maps to the last one.
    fn segment_at(&self, s: T) -> usize {
        let after = self.cumulative.partition_point(|&c| c <= s);
        after.saturating_sub(1).min(self.points.len() - 2)
    }

    /// Point at arc-length `s`, clamped to the polyline.
    pub fn point_at(&self, s: T) -> Point2<T> {
        let s = s.max(T::zero()).min(self.length());
        let i = self.segment_at(s);
        let (a, b) = (self.points[i], self.points[i + 1]);
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        let t = ((s - self.cumulative[i]) / seg).min(T::one());
        a + (b - a) * t
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self::new(points).expect("reversal keeps polyline valid")
    }

    pub fn min_max(&self) -> (Point2<T>, Point2<T>) {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points[1..] {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }
}

/// Closest point on a polyline, described by arc-length and distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcProjection<T> {
    pub s: T,
    pub d: T,
    pub foot_point: Point2<T>,
}

/// Global closest-point projection. Equal distances on different segments
/// resolve to the smaller arc-length.
pub fn project_onto_polyline<T: Scalar>(query: Point2<T>, line: &Polyline<T>) -> ArcProjection<T> {
    let pts = line.points();
    let cum = line.cumulative_arclength();
    let mut best: Option<ArcProjection<T>> = None;
    for i in 0..pts.len() - 1 {
        let a = pts[i];
        let ab = pts[i + 1] - a;
        let t = ((query - a).dot(ab) / ab.dot(ab)).max(T::zero()).min(T::one());
        let foot = a + ab * t;
        let d = query.distance(foot);
        if best.is_none_or(|b| d < b.d) {
            let s = (cum[i] + (cum[i + 1] - cum[i]) * t).min(line.length());
            best = Some(ArcProjection { s, d, foot_point: foot });
        }
    }
    best.expect("polyline has at least one segment")
}

fn distance_to_segment<T: Scalar>(q: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == T::zero() {
        return q.distance(a);
    }
    let t = ((q - a).dot(ab) / len2).max(T::zero()).min(T::one());
    q.distance(a + ab * t)
}

/// Twice the signed area of a closed ring (shoelace).
pub fn ring_signed_area2<T: Scalar>(ring: &[Point2<T>]) -> T {
    let n = ring.len();
    (0..n).fold(T::zero(), |acc, i| acc + ring[i].cross(ring[(i + 1) % n]))
}

/// Even-odd containment against an implicitly closed ring. Points on the
/// boundary (within [`Scalar::tolerance`]) count as inside; zero-area rings
/// contain nothing.
pub fn point_in_polygon<T: Scalar>(query: Point2<T>, ring: &[Point2<T>]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let tol = T::tolerance();
    if ring_signed_area2(ring).abs() <= tol * tol {
        return false;
    }
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if distance_to_segment(query, a, b) <= tol {
            return true;
        }
        if (a.y > query.y) != (b.y > query.y) {
            let x_cross = a.x + (query.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if query.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Heading of the last displacement longer than `epsilon`, scanning
/// backward from the final point. `None` for a stationary trajectory.
pub fn heading_at_end<T: Scalar>(points: &[Point2<T>], epsilon: T) -> Option<T> {
    points
        .windows(2)
        .rev()
        .map(|w| w[1] - w[0])
        .find(|v| v.norm() > epsilon)
        .map(Point2::heading)
}

/// `|atan2(sin(a - b), cos(a - b))|`, always in `[0, pi]`.
#[inline]
pub fn wrapped_angle_diff<T: Scalar>(a: T, b: T) -> T {
    let diff = a - b;
    diff.sin().atan2(diff.cos()).abs()
}

/// Heading of the polyline segment that contains arc-length `s`.
pub fn heading_on_polyline_at<T: Scalar>(line: &Polyline<T>, s: T) -> T {
    let i = line.segment_at(s);
    (line.points[i + 1] - line.points[i]).heading()
}

/// Rotation about the origin followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform<T> {
    pub angle: T,
    pub translation: Point2<T>,
}

impl<T: Scalar> RigidTransform<T> {
    pub fn new(angle: T, tx: T, ty: T) -> Self {
        Self {
            angle,
            translation: Point2::new(tx, ty),
        }
    }

    #[inline]
    pub fn apply(&self, p: Point2<T>) -> Point2<T> {
        let (sin, cos) = self.angle.sin_cos();
        Point2::new(cos * p.x - sin * p.y, sin * p.x + cos * p.y) + self.translation
    }
}
