//! Binding trajectory endpoints to lane centerlines with a confidence score.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::{
    heading_at_end, heading_on_polyline_at, project_onto_polyline, wrapped_angle_diff, Point2,
    DEFAULT_HEADING_EPSILON,
};
use crate::lane_graph::LaneIdx;
use crate::map::LaneMap;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignmentConfig<T> {
    /// Distance at which distance confidence reaches zero, in meters.
    pub c_dist: T,
    /// Heading difference at which orientation confidence reaches zero, in radians.
    pub c_orient: T,
    /// Weight of distance confidence against orientation confidence.
    pub w: T,
    /// Predictions keep every assignment within this much of the best one.
    pub margin: T,
    pub epsilon_heading: T,
}

impl<T: Scalar> Default for AssignmentConfig<T> {
    fn default() -> Self {
        Self {
            c_dist: T::of(5.0),
            c_orient: T::PI(),
            w: T::of(0.5),
            margin: T::of(0.1),
            epsilon_heading: T::of(DEFAULT_HEADING_EPSILON),
        }
    }
}

impl<T: Scalar> AssignmentConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c_dist > T::zero()
            && self.c_orient > T::zero()
            && self.w >= T::zero()
            && self.w <= T::one()
            && self.margin >= T::zero()
            && self.epsilon_heading > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "need c_dist > 0, c_orient > 0, 0 <= w <= 1, margin >= 0, epsilon > 0; got {self:?}"
            )))
        }
    }
}

/// The three confidences computed for one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confidence<T> {
    pub p_d: T,
    /// `None` when the trajectory has no heading.
    pub p_alpha: Option<T>,
    pub p: T,
}

/// `p_d = max(0, 1 - d / c_dist)`, `p_alpha = max(0, 1 - delta_alpha / c_orient)`
/// and `p = w p_d + (1 - w) p_alpha`. Without a heading, `p = p_d`.
pub fn confidence<T: Scalar>(d: T, delta_alpha: Option<T>, cfg: &AssignmentConfig<T>) -> Confidence<T> {
    let p_d = (T::one() - d / cfg.c_dist).max(T::zero());
    let p_alpha = delta_alpha.map(|a| (T::one() - a / cfg.c_orient).max(T::zero()));
    let p = match p_alpha {
        Some(pa) => cfg.w * p_d + (T::one() - cfg.w) * pa,
        None => p_d,
    };
    Confidence { p_d, p_alpha, p }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneAssignment<T> {
    pub segment: LaneIdx,
    /// Arc-length of the projected endpoint on the centerline.
    pub s: T,
    pub p: T,
    pub d: T,
    /// `None` when the trajectory is stationary.
    pub delta_alpha: Option<T>,
}

/// Descending confidence, then ascending segment (which is ascending id).
fn by_confidence<T: Scalar>(a: &LaneAssignment<T>, b: &LaneAssignment<T>) -> Ordering {
    b.p.partial_cmp(&a.p)
        .unwrap_or(Ordering::Equal)
        .then(a.segment.cmp(&b.segment))
}

/// All lane assignments of the final point of `trajectory`, best first.
/// An empty result means the endpoint lies in no lane polygon.
pub fn get_lane_assignments<T: Scalar>(
    trajectory: &[Point2<T>],
    map: &LaneMap<T>,
    cfg: &AssignmentConfig<T>,
) -> Vec<LaneAssignment<T>> {
    let Some(&end) = trajectory.last() else {
        return Vec::new();
    };
    let heading = heading_at_end(trajectory, cfg.epsilon_heading);
    let graph = map.graph();
    let mut out: Vec<LaneAssignment<T>> = map
        .containing_segments(end)
        .into_iter()
        .map(|idx| {
            let centerline = &graph[idx].centerline;
            let proj = project_onto_polyline(end, centerline);
            let delta_alpha =
                heading.map(|h| wrapped_angle_diff(h, heading_on_polyline_at(centerline, proj.s)));
            LaneAssignment {
                segment: idx,
                s: proj.s,
                p: confidence(proj.d, delta_alpha, cfg).p,
                d: proj.d,
                delta_alpha,
            }
        })
        .collect();
    out.sort_by(by_confidence);
    out
}

/// The single most confident assignment, if any.
pub fn select_ground_truth_assignment<T: Scalar>(assignments: &[LaneAssignment<T>]) -> Option<LaneAssignment<T>> {
    assignments.iter().copied().min_by(by_confidence)
}

/// Every assignment whose confidence is at most `margin` below the best.
pub fn select_prediction_assignments<T: Scalar>(
    assignments: &[LaneAssignment<T>],
    cfg: &AssignmentConfig<T>,
) -> Vec<LaneAssignment<T>> {
    let Some(best) = assignments.iter().map(|a| a.p).reduce(T::max) else {
        return Vec::new();
    };
    let floor = best - cfg.margin;
    assignments.iter().filter(|a| a.p >= floor).copied().collect()
}
