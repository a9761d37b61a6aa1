//! Lane segments, successor/predecessor adjacency and lane polygons.

use std::collections::BTreeSet;
use std::fmt;

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Polyline};
use crate::scalar::Scalar;

/// Fallback half lane width when a segment carries no boundaries, in meters.
pub const DEFAULT_HALF_WIDTH: f64 = 2.0;

/// Miter length cap for buffered corners, as a multiple of the half width.
const MITER_LIMIT: f64 = 4.0;

/// Opaque lane identifier as it appears in map files. Ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneId(pub String);

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LaneId {
    fn from(s: &str) -> Self {
        LaneId(s.to_owned())
    }
}

/// Dense index of a segment inside a [`LaneGraph`]. Segments are stored in
/// ascending [`LaneId`] order, so index order equals id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneIdx(pub usize);

impl fmt::Display for LaneIdx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Unvalidated segment description, as parsed from a map file.
#[derive(Debug, Clone)]
pub struct RawLaneSegment<T> {
    pub id: LaneId,
    pub centerline: Vec<Point2<T>>,
    pub left_boundary: Option<Vec<Point2<T>>>,
    pub right_boundary: Option<Vec<Point2<T>>>,
    pub successors: Vec<LaneId>,
    pub predecessors: Vec<LaneId>,
}

#[derive(Debug, Clone)]
pub struct LaneSegment<T> {
    pub id: LaneId,
    pub centerline: Polyline<T>,
    pub left_boundary: Option<Polyline<T>>,
    pub right_boundary: Option<Polyline<T>>,
    successors: Vec<LaneIdx>,
    predecessors: Vec<LaneIdx>,
    length: T,
}

impl<T: Scalar> LaneSegment<T> {
    pub fn successors(&self) -> &[LaneIdx] {
        &self.successors
    }

    pub fn predecessors(&self) -> &[LaneIdx] {
        &self.predecessors
    }

    /// Centerline arc-length.
    pub fn length(&self) -> T {
        self.length
    }
}

/// Repairs applied while building a graph from raw input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphRepairs {
    /// Links to ids that are not in the map; dropped.
    pub dangling_links: usize,
    /// Links from a segment to itself; dropped.
    pub self_links: usize,
    /// Links stated in only one direction; completed.
    pub asymmetric_links: usize,
}

/// Immutable lane graph. Adjacency is symmetric:
/// `b` succeeds `a` exactly when `a` precedes `b`.
#[derive(Debug, Clone)]
pub struct LaneGraph<T> {
    segments: Vec<LaneSegment<T>>,
    repairs: GraphRepairs,
}

fn polyline_for<T: Scalar>(id: &LaneId, what: &str, points: Vec<Point2<T>>) -> Result<Polyline<T>> {
    Polyline::new(points).map_err(|e| Error::InvalidSegment {
        id: id.0.clone(),
        reason: format!("{what}: {e}"),
    })
}

/// Validates raw segments, drops dangling and self links, and symmetrizes
/// successor/predecessor lists.
pub fn build_lane_graph<T: Scalar>(mut raw: Vec<RawLaneSegment<T>>) -> Result<LaneGraph<T>> {
    if raw.is_empty() {
        return Err(Error::EmptyLaneGraph);
    }
    raw.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = raw.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::DuplicateLaneId(w[0].id.0.clone()));
    }
    let lookup = |id: &LaneId| raw.binary_search_by(|s| s.id.cmp(id)).ok();

    let mut repairs = GraphRepairs::default();
    // (from, to) pairs as stated by the upstream side and by the downstream side
    let mut by_upstream: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut by_downstream: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, seg) in raw.iter().enumerate() {
        let links = seg
            .successors
            .iter()
            .map(|id| (id, true))
            .chain(seg.predecessors.iter().map(|id| (id, false)));
        for (other, forward) in links {
            let Some(j) = lookup(other) else {
                warn!("lane {}: dropping link to unknown lane {}", seg.id, other);
                repairs.dangling_links += 1;
                continue;
            };
            if j == i {
                warn!("lane {}: dropping self link", seg.id);
                repairs.self_links += 1;
                continue;
            }
            if forward {
                by_upstream.insert((i, j));
            } else {
                by_downstream.insert((j, i));
            }
        }
    }
    let edges: BTreeSet<(usize, usize)> = by_upstream.union(&by_downstream).copied().collect();
    repairs.asymmetric_links = by_upstream.symmetric_difference(&by_downstream).count();
    if repairs.asymmetric_links > 0 {
        warn!("symmetrized {} one-directional lane links", repairs.asymmetric_links);
    }

    let mut successors = vec![Vec::new(); raw.len()];
    let mut predecessors = vec![Vec::new(); raw.len()];
    for &(a, b) in &edges {
        successors[a].push(LaneIdx(b));
        predecessors[b].push(LaneIdx(a));
    }

    let mut segments = Vec::with_capacity(raw.len());
    for ((seg, succ), pred) in raw.into_iter().zip(successors).zip(predecessors) {
        if seg.centerline.len() < 2 {
            return Err(Error::InvalidSegment {
                id: seg.id.0,
                reason: format!("centerline needs at least 2 points, got {}", seg.centerline.len()),
            });
        }
        let centerline = polyline_for(&seg.id, "centerline", seg.centerline)?;
        let (left_boundary, right_boundary) = match (seg.left_boundary, seg.right_boundary) {
            (Some(l), Some(r)) => (
                Some(polyline_for(&seg.id, "left boundary", l)?),
                Some(polyline_for(&seg.id, "right boundary", r)?),
            ),
            (None, None) => (None, None),
            _ => {
                return Err(Error::InvalidSegment {
                    id: seg.id.0,
                    reason: "boundaries must be given as a left/right pair".into(),
                })
            }
        };
        let length = centerline.length();
        segments.push(LaneSegment {
            id: seg.id,
            centerline,
            left_boundary,
            right_boundary,
            successors: succ,
            predecessors: pred,
            length,
        });
    }
    Ok(LaneGraph { segments, repairs })
}

impl<T: Scalar> LaneGraph<T> {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[LaneSegment<T>] {
        &self.segments
    }

    pub fn segment(&self, idx: LaneIdx) -> Result<&LaneSegment<T>> {
        self.segments
            .get(idx.0)
            .ok_or_else(|| Error::UnknownSegment(idx.to_string()))
    }

    pub fn index_of(&self, id: &LaneId) -> Option<LaneIdx> {
        self.segments.binary_search_by(|s| s.id.cmp(id)).ok().map(LaneIdx)
    }

    pub fn id(&self, idx: LaneIdx) -> &LaneId {
        &self.segments[idx.0].id
    }

    pub fn repairs(&self) -> GraphRepairs {
        self.repairs
    }

    pub fn indices(&self) -> impl Iterator<Item = LaneIdx> {
        (0..self.segments.len()).map(LaneIdx)
    }
}

impl<T> std::ops::Index<LaneIdx> for LaneGraph<T> {
    type Output = LaneSegment<T>;
    fn index(&self, idx: LaneIdx) -> &LaneSegment<T> {
        &self.segments[idx.0]
    }
}

/// Area a segment covers on the road surface.
#[derive(Debug, Clone, PartialEq)]
pub struct LanePolygon<T> {
    pub segment_id: LaneId,
    pub ring: Vec<Point2<T>>,
}

/// Left boundary followed by the reversed right boundary when the segment has
/// boundaries; otherwise the centerline buffered by `half_width` on each side
/// with mitered corners.
pub fn lane_polygon<T: Scalar>(segment: &LaneSegment<T>, half_width: T) -> LanePolygon<T> {
    let ring = match (&segment.left_boundary, &segment.right_boundary) {
        (Some(left), Some(right)) => left
            .points()
            .iter()
            .chain(right.points().iter().rev())
            .copied()
            .collect(),
        _ => buffered_ring(&segment.centerline, half_width),
    };
    LanePolygon {
        segment_id: segment.id.clone(),
        ring,
    }
}

fn buffered_ring<T: Scalar>(line: &Polyline<T>, half_width: T) -> Vec<Point2<T>> {
    let pts = line.points();
    let n = pts.len();
    let dirs: Vec<Point2<T>> = pts
        .windows(2)
        .map(|w| {
            let v = w[1] - w[0];
            v * (T::one() / v.norm())
        })
        .collect();
    let min_cos = T::one() / T::of(MITER_LIMIT);
    let offsets: Vec<Point2<T>> = (0..n)
        .map(|i| {
            if i == 0 {
                return dirs[0].perp() * half_width;
            }
            if i == n - 1 {
                return dirs[n - 2].perp() * half_width;
            }
            let sum = dirs[i - 1] + dirs[i];
            let len = sum.norm();
            if len < T::tolerance() {
                return dirs[i].perp() * half_width;
            }
            let normal = (sum * (T::one() / len)).perp();
            let cos = normal.dot(dirs[i].perp()).max(min_cos);
            normal * (half_width / cos)
        })
        .collect();
    let left = pts.iter().zip(&offsets).map(|(&p, &o)| p + o);
    let right: Vec<Point2<T>> = pts.iter().zip(&offsets).map(|(&p, &o)| p - o).collect();
    left.chain(right.into_iter().rev()).collect()
}
