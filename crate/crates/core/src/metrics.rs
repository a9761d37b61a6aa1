//! Lane Miss Rate and the Euclidean comparison metrics.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{
    get_lane_assignments, select_ground_truth_assignment, select_prediction_assignments, AssignmentConfig,
};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::lane_distance::{within_lane_distance, LanePoint};
use crate::map::LaneMap;
use crate::scalar::Scalar;

/// Agent classes evaluated by default: vehicle-like agents.
pub const DEFAULT_AGENT_CLASSES: [&str; 3] = ["vehicle", "motorcyclist", "bus"];

/// Evenly sampled 2D positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub points: Vec<Point2<T>>,
    /// Seconds between consecutive points.
    pub dt: T,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(points: Vec<Point2<T>>, dt: T) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidTrajectory("trajectory has no points".into()));
        }
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("dt must be positive, got {dt}")));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("non-finite coordinate at point {i}")));
        }
        Ok(Self { points, dt })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn endpoint(&self) -> Point2<T> {
        *self.points.last().expect("trajectory is non-empty")
    }
}

/// The `k` predicted modes of one agent, most confident first.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet<T> {
    modes: Vec<Trajectory<T>>,
    probabilities: Option<Vec<T>>,
}

impl<T: Scalar> PredictionSet<T> {
    /// Validates and orders modes by descending probability (stable, so equal
    /// probabilities keep input order). Without probabilities the input order
    /// is the confidence order.
    pub fn new(modes: Vec<Trajectory<T>>, probabilities: Option<Vec<T>>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::NoPredictionModes);
        }
        let (len, dt) = (modes[0].len(), modes[0].dt);
        if let Some(i) = modes.iter().position(|m| m.len() != len || m.dt != dt) {
            return Err(Error::InvalidPredictions(format!(
                "mode {i} has {} points at dt {}, mode 0 has {len} at dt {dt}",
                modes[i].len(),
                modes[i].dt
            )));
        }
        let Some(probs) = probabilities else {
            return Ok(Self { modes, probabilities: None });
        };
        if probs.len() != modes.len() {
            return Err(Error::InvalidPredictions(format!(
                "{} probabilities for {} modes",
                probs.len(),
                modes.len()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !(*p >= T::zero() && *p <= T::one())) {
            return Err(Error::InvalidPredictions(format!("probability {i} outside [0, 1]: {}", probs[i])));
        }
        let total = probs.iter().fold(T::zero(), |a, &b| a + b);
        if total > T::one() + T::of(1e-6) {
            return Err(Error::InvalidPredictions(format!("probabilities sum to {total} > 1")));
        }
        let mut order: Vec<usize> = (0..modes.len()).collect();
        order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).expect("finite probabilities"));
        let mut slots: Vec<Option<Trajectory<T>>> = modes.into_iter().map(Some).collect();
        let modes = order.iter().map(|&i| slots[i].take().expect("each index once")).collect();
        let probabilities = Some(order.iter().map(|&i| probs[i]).collect());
        Ok(Self { modes, probabilities })
    }

    pub fn modes(&self) -> &[Trajectory<T>] {
        &self.modes
    }

    pub fn probabilities(&self) -> Option<&[T]> {
        self.probabilities.as_deref()
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    /// The `k` most confident modes, or `None` if fewer are available.
    pub fn top_k(&self, k: usize) -> Option<Self> {
        if k == 0 || k > self.modes.len() {
            return None;
        }
        Some(Self {
            modes: self.modes[..k].to_vec(),
            probabilities: self.probabilities.as_ref().map(|p| p[..k].to_vec()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig<T> {
    /// Seconds; scales ground-truth speed into the hit threshold.
    pub c_scale: T,
    /// Meters; constant part of the hit threshold.
    pub c_const: T,
    /// Fixed radius of the Euclidean miss rate, meters.
    pub euclidean_mr_threshold: T,
    pub assignment: AssignmentConfig<T>,
    pub agent_classes: BTreeSet<String>,
}

impl<T: Scalar> Default for MetricConfig<T> {
    fn default() -> Self {
        Self {
            c_scale: T::of(0.2),
            c_const: T::of(0.7),
            euclidean_mr_threshold: T::of(2.0),
            assignment: AssignmentConfig::default(),
            agent_classes: DEFAULT_AGENT_CLASSES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl<T: Scalar> MetricConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_scale >= T::zero() && self.c_const > T::zero() && self.euclidean_mr_threshold > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "need c_scale >= 0, c_const > 0, mr threshold > 0; got {}, {}, {}",
                self.c_scale, self.c_const, self.euclidean_mr_threshold
            )));
        }
        self.assignment.validate()
    }
}

/// Path length over elapsed time.
pub fn average_velocity<T: Scalar>(traj: &Trajectory<T>) -> Result<T> {
    if traj.len() < 2 {
        return Err(Error::InvalidTrajectory(format!(
            "ground truth needs >= 2 points, got {}",
            traj.len()
        )));
    }
    let path = traj
        .points
        .windows(2)
        .fold(T::zero(), |acc, w| acc + w[0].distance(w[1]));
    let elapsed = T::from_usize(traj.len() - 1).expect("point count fits") * traj.dt;
    Ok(path / elapsed)
}

/// `c_scale * v + c_const`.
pub fn hit_threshold<T: Scalar>(v: T, cfg: &MetricConfig<T>) -> T {
    cfg.c_scale * v + cfg.c_const
}

/// Per-mode lane miss labels of one sequence (1 = miss).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsMiss {
    pub labels: Vec<u8>,
    /// The ground truth had no lane assignment; labels use the s_hit radius.
    pub fallback: bool,
}

/// Lane miss labels for every mode of `preds`, in mode order.
pub fn get_is_miss<T: Scalar>(
    gt: &Trajectory<T>,
    preds: &PredictionSet<T>,
    map: &LaneMap<T>,
    cfg: &MetricConfig<T>,
) -> Result<IsMiss> {
    if preds.k() == 0 {
        return Err(Error::NoPredictionModes);
    }
    let s_hit = hit_threshold(average_velocity(gt)?, cfg);
    let gt_assignment = select_ground_truth_assignment(&get_lane_assignments(&gt.points, map, &cfg.assignment));

    let Some(gt_assignment) = gt_assignment else {
        let end = gt.endpoint();
        let labels = preds
            .modes()
            .iter()
            .map(|m| u8::from(m.endpoint().distance(end) >= s_hit))
            .collect();
        return Ok(IsMiss { labels, fallback: true });
    };

    let from = LanePoint::new(gt_assignment.segment, gt_assignment.s);
    let mut labels = Vec::with_capacity(preds.k());
    for mode in preds.modes() {
        let all = get_lane_assignments(&mode.points, map, &cfg.assignment);
        let targets: Vec<LanePoint<T>> = select_prediction_assignments(&all, &cfg.assignment)
            .iter()
            .map(|a| LanePoint::new(a.segment, a.s))
            .collect();
        let hit = !targets.is_empty() && within_lane_distance(map.graph(), from, &targets, s_hit)?.reached;
        labels.push(u8::from(!hit));
    }
    Ok(IsMiss { labels, fallback: false })
}

/// Stacked per-sequence labels, one row per sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MissMatrix {
    pub rows: Vec<Vec<u8>>,
    pub fallback_count: usize,
}

/// `(LMR@1, LMR@k)`: share of rows whose first entry is a miss, and share of
/// rows where every entry is a miss.
pub fn accumulate_lmr(matrix: &MissMatrix) -> Result<(f64, f64)> {
    if matrix.rows.is_empty() {
        return Err(Error::EmptyMissMatrix);
    }
    let d = matrix.rows.len() as f64;
    let first = matrix.rows.iter().filter(|r| r.first() == Some(&1)).count();
    let all = matrix
        .rows
        .iter()
        .filter(|r| !r.is_empty() && r.iter().all(|&x| x == 1))
        .count();
    Ok((first as f64 / d, all as f64 / d))
}

/// Displacement metrics of one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanMetrics<T> {
    pub min_ade_at_1: T,
    pub min_fde_at_1: T,
    pub mr_at_1: u8,
    pub min_ade_at_k: T,
    pub min_fde_at_k: T,
    pub mr_at_k: u8,
}

fn ade<T: Scalar>(gt: &Trajectory<T>, mode: &Trajectory<T>) -> T {
    let sum = gt
        .points
        .iter()
        .zip(&mode.points)
        .fold(T::zero(), |acc, (a, b)| acc + a.distance(*b));
    sum / T::from_usize(gt.len()).expect("point count fits")
}

/// minADE/minFDE/MR for the top mode and over all modes. The @k ADE comes
/// from the mode with the smallest endpoint error (first one on ties).
pub fn euclidean_metrics<T: Scalar>(
    gt: &Trajectory<T>,
    preds: &PredictionSet<T>,
    threshold: T,
) -> Result<EuclideanMetrics<T>> {
    if preds.k() == 0 {
        return Err(Error::NoPredictionModes);
    }
    if let Some(i) = preds.modes().iter().position(|m| m.len() != gt.len()) {
        return Err(Error::InvalidPredictions(format!(
            "mode {i} has {} points, ground truth has {}",
            preds.modes()[i].len(),
            gt.len()
        )));
    }
    let end = gt.endpoint();
    let fde: Vec<T> = preds.modes().iter().map(|m| m.endpoint().distance(end)).collect();
    let mut best = 0;
    for (i, &f) in fde.iter().enumerate().skip(1) {
        if f < fde[best] {
            best = i;
        }
    }
    Ok(EuclideanMetrics {
        min_ade_at_1: ade(gt, &preds.modes()[0]),
        min_fde_at_1: fde[0],
        mr_at_1: u8::from(fde[0] > threshold),
        min_ade_at_k: ade(gt, &preds.modes()[best]),
        min_fde_at_k: fde[best],
        mr_at_k: u8::from(fde.iter().all(|&f| f > threshold)),
    })
}

/// Everything needed to evaluate one focal agent.
#[derive(Debug, Clone)]
pub struct Sequence<T: Scalar> {
    pub id: String,
    pub focal_agent_class: String,
    pub ground_truth: Trajectory<T>,
    pub predictions: PredictionSet<T>,
    pub map: Arc<LaneMap<T>>,
}

/// Labels and errors of a single sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub sequence_id: String,
    pub s_hit: f64,
    pub lane: IsMiss,
    pub euclidean: EuclideanMetrics<f64>,
}

pub fn evaluate_sequence<T: Scalar>(seq: &Sequence<T>, cfg: &MetricConfig<T>) -> Result<SequenceResult> {
    let lane = get_is_miss(&seq.ground_truth, &seq.predictions, &seq.map, cfg)?;
    let e = euclidean_metrics(&seq.ground_truth, &seq.predictions, cfg.euclidean_mr_threshold)?;
    Ok(SequenceResult {
        sequence_id: seq.id.clone(),
        s_hit: hit_threshold(average_velocity(&seq.ground_truth)?, cfg).to_f64_lossy(),
        lane,
        euclidean: EuclideanMetrics {
            min_ade_at_1: e.min_ade_at_1.to_f64_lossy(),
            min_fde_at_1: e.min_fde_at_1.to_f64_lossy(),
            mr_at_1: e.mr_at_1,
            min_ade_at_k: e.min_ade_at_k.to_f64_lossy(),
            min_fde_at_k: e.min_fde_at_k.to_f64_lossy(),
            mr_at_k: e.mr_at_k,
        },
    })
}

/// Dataset-level results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sequence_count: usize,
    pub k: usize,
    pub lmr_at_1: f64,
    pub lmr_at_k: f64,
    pub mr_at_1: f64,
    pub mr_at_k: f64,
    pub min_ade_at_1: f64,
    pub min_fde_at_1: f64,
    pub min_ade_at_k: f64,
    pub min_fde_at_k: f64,
    /// Sequences whose ground truth had no lane assignment.
    pub fallback_count: usize,
    /// Sequences skipped by the agent class filter.
    pub filtered_count: usize,
}

/// Folds per-sequence results, in order, into a report.
pub fn aggregate(results: &[SequenceResult], filtered_count: usize) -> Result<MetricReport> {
    let Some(first) = results.first() else {
        return Err(Error::NoSequences);
    };
    let k = first.lane.labels.len();
    if let Some(r) = results.iter().find(|r| r.lane.labels.len() != k) {
        return Err(Error::InvalidPredictions(format!(
            "sequence {} has {} modes, expected {k}",
            r.sequence_id,
            r.lane.labels.len()
        )));
    }
    let matrix = MissMatrix {
        rows: results.iter().map(|r| r.lane.labels.clone()).collect(),
        fallback_count: results.iter().filter(|r| r.lane.fallback).count(),
    };
    let (lmr_at_1, lmr_at_k) = accumulate_lmr(&matrix)?;
    let d = results.len() as f64;
    let mean = |f: fn(&EuclideanMetrics<f64>) -> f64| results.iter().map(|r| f(&r.euclidean)).sum::<f64>() / d;
    Ok(MetricReport {
        sequence_count: results.len(),
        k,
        lmr_at_1,
        lmr_at_k,
        mr_at_1: mean(|e| f64::from(e.mr_at_1)),
        mr_at_k: mean(|e| f64::from(e.mr_at_k)),
        min_ade_at_1: mean(|e| e.min_ade_at_1),
        min_fde_at_1: mean(|e| e.min_fde_at_1),
        min_ade_at_k: mean(|e| e.min_ade_at_k),
        min_fde_at_k: mean(|e| e.min_fde_at_k),
        fallback_count: matrix.fallback_count,
        filtered_count,
    })
}

/// Evaluates every sequence whose focal agent class passes the filter on a
/// pool of `workers` threads. Results are reduced in input order, so the
/// report does not depend on the worker count.
pub fn evaluate_dataset<T: Scalar>(
    dataset: &[Sequence<T>],
    cfg: &MetricConfig<T>,
    workers: usize,
) -> Result<(MetricReport, Vec<SequenceResult>)> {
    cfg.validate()?;
    let selected: Vec<&Sequence<T>> = dataset
        .iter()
        .filter(|s| cfg.agent_classes.contains(&s.focal_agent_class))
        .collect();
    let filtered_count = dataset.len() - selected.len();
    if selected.is_empty() {
        return Err(Error::NoSequences);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let results: Vec<SequenceResult> = pool.install(|| {
        selected
            .par_iter()
            .map(|s| evaluate_sequence(s, cfg))
            .collect::<Result<_>>()
    })?;
    let report = aggregate(&results, filtered_count)?;
    Ok((report, results))
}
