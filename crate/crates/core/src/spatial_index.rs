//! Bounding-rectangle index over lane centerlines.

use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};

use crate::geometry::Point2;
use crate::lane_graph::{LaneGraph, LaneIdx};
use crate::scalar::Scalar;

/// Extra query margin on top of the half-width fallback, in meters.
pub const DEFAULT_INFLATE_MARGIN: f64 = 1.0;

/// Axis-aligned minimum bounding rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mbr<T> {
    pub min_x: T,
    pub min_y: T,
    pub max_x: T,
    pub max_y: T,
}

impl<T: Scalar> Mbr<T> {
    pub fn of_points(points: &[Point2<T>]) -> Self {
        let mut m = Mbr {
            min_x: points[0].x,
            min_y: points[0].y,
            max_x: points[0].x,
            max_y: points[0].y,
        };
        for p in &points[1..] {
            m.min_x = m.min_x.min(p.x);
            m.min_y = m.min_y.min(p.y);
            m.max_x = m.max_x.max(p.x);
            m.max_y = m.max_y.max(p.y);
        }
        m
    }

    /// Same comparison rstar applies to envelopes, so the scan and the tree
    /// agree on touching boxes.
    #[inline]
    fn intersects(&self, lo: [T; 2], hi: [T; 2]) -> bool {
        self.min_x <= hi[0] && self.min_y <= hi[1] && self.max_x >= lo[0] && self.max_y >= lo[1]
    }

    /// Largest distance any of `points` lies outside this rectangle along an axis.
    pub fn overhang(&self, points: &[Point2<T>]) -> T {
        points.iter().fold(T::zero(), |acc, p| {
            acc.max(self.min_x - p.x)
                .max(p.x - self.max_x)
                .max(self.min_y - p.y)
                .max(p.y - self.max_y)
        })
    }
}

/// How candidates are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexMode {
    #[default]
    RTree,
    /// Brute-force scan over all rectangles; yields the same sets as the tree.
    LinearScan,
}

type Entry<T> = GeomWithData<Rectangle<[T; 2]>, usize>;

#[derive(Debug, Clone)]
pub struct CenterlineIndex<T: Scalar> {
    tree: RTree<Entry<T>>,
    mbrs: Vec<Mbr<T>>,
    mode: IndexMode,
}

/// One entry per segment, keyed by the tight rectangle around its centerline.
pub fn build_index<T: Scalar>(graph: &LaneGraph<T>, mode: IndexMode) -> CenterlineIndex<T> {
    let mbrs: Vec<Mbr<T>> = graph
        .segments()
        .iter()
        .map(|s| Mbr::of_points(s.centerline.points()))
        .collect();
    let entries = mbrs
        .iter()
        .enumerate()
        .map(|(i, m)| GeomWithData::new(Rectangle::from_corners([m.min_x, m.min_y], [m.max_x, m.max_y]), i))
        .collect();
    CenterlineIndex {
        tree: RTree::bulk_load(entries),
        mbrs,
        mode,
    }
}

impl<T: Scalar> CenterlineIndex<T> {
    pub fn len(&self) -> usize {
        self.mbrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mbrs.is_empty()
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn mbr(&self, idx: LaneIdx) -> &Mbr<T> {
        &self.mbrs[idx.0]
    }

    /// Segments whose rectangle, grown by `inflate` on every side, contains
    /// `point`. Sorted by index.
    pub fn query_candidates(&self, point: Point2<T>, inflate: T) -> Vec<LaneIdx> {
        let lo = [point.x - inflate, point.y - inflate];
        let hi = [point.x + inflate, point.y + inflate];
        let mut out: Vec<LaneIdx> = match self.mode {
            IndexMode::RTree => self
                .tree
                .locate_in_envelope_intersecting(AABB::from_corners(lo, hi))
                .map(|e| LaneIdx(e.data))
                .collect(),
            IndexMode::LinearScan => self.scan(lo, hi),
        };
        out.sort_unstable();
        out
    }

    fn scan(&self, lo: [T; 2], hi: [T; 2]) -> Vec<LaneIdx> {
        self.mbrs
            .iter()
            .enumerate()
            .filter(|(_, m)| m.intersects(lo, hi))
            .map(|(i, _)| LaneIdx(i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point_in_polygon;
    use crate::lane_graph::{build_lane_graph, lane_polygon, RawLaneSegment};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn seg(id: String, pts: Vec<Point2<f64>>) -> RawLaneSegment<f64> {
        RawLaneSegment {
            id: crate::lane_graph::LaneId(id),
            centerline: pts,
            left_boundary: None,
            right_boundary: None,
            successors: vec![],
            predecessors: vec![],
        }
    }

    /// `n x n` grid of short lanes, alternating horizontal and vertical.
    fn grid(n: usize) -> LaneGraph<f64> {
        let mut segs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (i as f64 * 12.0, j as f64 * 12.0);
                let end = if (i + j) % 2 == 0 { p(x + 8.0, y + 1.0) } else { p(x + 1.0, y + 8.0) };
                segs.push(seg(format!("{i:03}-{j:03}"), vec![p(x, y), end]));
            }
        }
        build_lane_graph(segs).unwrap()
    }

    #[test]
    fn entry_counts() {
        let one = build_lane_graph(vec![seg("a".into(), vec![p(0.0, 0.0), p(1.0, 0.0)])]).unwrap();
        assert_eq!(build_index(&one, IndexMode::RTree).len(), 1);
        assert_eq!(build_index(&grid(10), IndexMode::LinearScan).len(), 100);
        let g1000: Vec<_> = (0..1000)
            .map(|i| seg(format!("{i:04}"), vec![p(i as f64 * 3.0, 0.0), p(i as f64 * 3.0 + 2.0, 0.5)]))
            .collect();
        let g1000 = build_lane_graph(g1000).unwrap();
        assert_eq!(build_index(&g1000, IndexMode::RTree).len(), 1000);
    }

    #[test]
    fn mbr_is_tight() {
        let g = build_lane_graph(vec![seg("a".into(), vec![p(1.0, 5.0), p(-2.0, 3.0), p(4.0, -1.0)])]).unwrap();
        let idx = build_index(&g, IndexMode::RTree);
        assert_eq!(*idx.mbr(LaneIdx(0)), Mbr { min_x: -2.0, min_y: -1.0, max_x: 4.0, max_y: 5.0 });
    }

    #[test]
    fn far_and_inside_queries() {
        let g = grid(4);
        for mode in [IndexMode::RTree, IndexMode::LinearScan] {
            let idx = build_index(&g, mode);
            assert!(idx.query_candidates(p(500.0, 500.0), 3.0).is_empty());
            assert!(idx.query_candidates(p(-10.0, -10.0), 0.0).is_empty());
            let hit = idx.query_candidates(p(4.0, 0.5), 0.0);
            assert!(hit.contains(&g.index_of(&"000-000".into()).unwrap()));
        }
    }

    #[test]
    fn tree_equals_scan_and_covers_polygons() {
        let g = grid(10);
        let tree = build_index(&g, IndexMode::RTree);
        let scan = build_index(&g, IndexMode::LinearScan);
        let polys: Vec<_> = g.segments().iter().map(|s| lane_polygon(s, 2.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let q = p(rng.gen_range(-5.0..125.0), rng.gen_range(-5.0..125.0));
            let a = tree.query_candidates(q, 3.0);
            assert_eq!(a, scan.query_candidates(q, 3.0));
            // brute-force oracle over every polygon
            for (i, poly) in polys.iter().enumerate() {
                if point_in_polygon(q, &poly.ring) {
                    assert!(a.contains(&LaneIdx(i)), "missing {i} for {q:?}");
                }
            }
        }
    }
}
