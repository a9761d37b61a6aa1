//! A lane graph prepared for endpoint assignment: polygons plus index.

use crate::geometry::Point2;
use crate::lane_graph::{lane_polygon, LaneGraph, LaneIdx, LanePolygon, DEFAULT_HALF_WIDTH};
use crate::scalar::Scalar;
use crate::spatial_index::{build_index, CenterlineIndex, IndexMode, DEFAULT_INFLATE_MARGIN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConfig<T> {
    /// Half width used to buffer centerlines of segments without boundaries.
    pub half_width: T,
    /// Query margin around an endpoint. `None` means `half_width + 1 m`.
    pub inflate: Option<T>,
    pub index_mode: IndexMode,
}

impl<T: Scalar> Default for MapConfig<T> {
    fn default() -> Self {
        Self {
            half_width: T::of(DEFAULT_HALF_WIDTH),
            inflate: None,
            index_mode: IndexMode::RTree,
        }
    }
}

/// Lane graph with per-segment polygons and a centerline index.
///
/// The effective query margin is never smaller than the furthest any lane
/// polygon reaches past its centerline rectangle, so the candidate set always
/// covers every polygon containing the query point.
#[derive(Debug, Clone)]
pub struct LaneMap<T: Scalar> {
    graph: LaneGraph<T>,
    polygons: Vec<LanePolygon<T>>,
    index: CenterlineIndex<T>,
    inflate: T,
}

impl<T: Scalar> LaneMap<T> {
    pub fn new(graph: LaneGraph<T>, cfg: &MapConfig<T>) -> Self {
        let polygons: Vec<_> = graph
            .segments()
            .iter()
            .map(|s| lane_polygon(s, cfg.half_width))
            .collect();
        let index = build_index(&graph, cfg.index_mode);
        let required = graph.indices().fold(T::zero(), |acc, i| {
            acc.max(index.mbr(i).overhang(&polygons[i.0].ring))
        });
        let configured = cfg
            .inflate
            .unwrap_or(cfg.half_width + T::of(DEFAULT_INFLATE_MARGIN));
        Self {
            graph,
            polygons,
            index,
            inflate: configured.max(required + T::tolerance()),
        }
    }

    pub fn graph(&self) -> &LaneGraph<T> {
        &self.graph
    }

    pub fn index(&self) -> &CenterlineIndex<T> {
        &self.index
    }

    pub fn polygon(&self, idx: LaneIdx) -> &LanePolygon<T> {
        &self.polygons[idx.0]
    }

    pub fn inflate(&self) -> T {
        self.inflate
    }

    /// Segments whose lane polygon contains `point`, ascending by index.
    pub fn containing_segments(&self, point: Point2<T>) -> Vec<LaneIdx> {
        self.index
            .query_candidates(point, self.inflate)
            .into_iter()
            .filter(|&i| crate::geometry::point_in_polygon(point, &self.polygons[i.0].ring))
            .collect()
    }
}
