//! Lane-based evaluation of multi-modal trajectory predictions.
//!
//! A predicted endpoint counts as a hit when it can be reached from the
//! ground-truth endpoint along the lane graph within a speed-dependent
//! threshold. The Lane Miss Rate (LMR) reports how often that fails, next to
//! the usual Euclidean minADE, minFDE and miss rate.
//!
//! The geometry and metric code is generic over [`Scalar`] (`f32` or `f64`).
//! The aliases at the crate root fix the type for the common case.
//!
//! ```
//! use lmr_core::{hit_threshold, MetricConfig64};
//!
//! let s_hit = hit_threshold(6.67, &MetricConfig64::default());
//! assert!((s_hit - 2.034).abs() < 1e-9);
//! ```

pub mod assignment;
pub mod error;
pub mod geometry;
pub mod lane_distance;
pub mod lane_graph;
pub mod map;
pub mod metrics;
pub mod scalar;
pub mod scenario_io;
pub mod spatial_index;
pub mod testkit;

pub use assignment::{
    confidence, get_lane_assignments, select_ground_truth_assignment, select_prediction_assignments,
    AssignmentConfig, Confidence, LaneAssignment,
};
pub use error::{Error, Result};
pub use geometry::{point_in_polygon, project_onto_polyline, ArcProjection, Point2, Polyline, RigidTransform};
pub use lane_distance::{oracle_lane_distance, within_lane_distance, LanePoint, ReachResult};
pub use lane_graph::{build_lane_graph, lane_polygon, LaneGraph, LaneId, LaneIdx, LanePolygon, LaneSegment, RawLaneSegment};
pub use map::{LaneMap, MapConfig};
pub use metrics::{
    accumulate_lmr, aggregate, average_velocity, euclidean_metrics, evaluate_dataset, evaluate_sequence, get_is_miss,
    hit_threshold, EuclideanMetrics, IsMiss, MetricConfig, MetricReport, MissMatrix, PredictionSet, Sequence,
    SequenceResult, Trajectory,
};
pub use scalar::Scalar;
pub use spatial_index::{build_index, CenterlineIndex, IndexMode};

pub type Point64 = Point2<f64>;
pub type Polyline64 = Polyline<f64>;
pub type LaneGraph64 = LaneGraph<f64>;
pub type LaneMap64 = LaneMap<f64>;
pub type MapConfig64 = MapConfig<f64>;
pub type AssignmentConfig64 = AssignmentConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type PredictionSet64 = PredictionSet<f64>;
pub type MetricConfig64 = MetricConfig<f64>;
pub type Sequence64 = Sequence<f64>;

pub type Point32 = Point2<f32>;
pub type Polyline32 = Polyline<f32>;
pub type LaneGraph32 = LaneGraph<f32>;
pub type LaneMap32 = LaneMap<f32>;
pub type MapConfig32 = MapConfig<f32>;
pub type AssignmentConfig32 = AssignmentConfig<f32>;
pub type Trajectory32 = Trajectory<f32>;
pub type PredictionSet32 = PredictionSet<f32>;
pub type MetricConfig32 = MetricConfig<f32>;
pub type Sequence32 = Sequence<f32>;
