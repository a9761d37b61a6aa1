//! Synthetic scenarios: small road topologies with a ground truth riding a
//! lane centerline and predictions placed at chosen offsets from it.
//!
//! Coordinates are rounded to millimeters so generated files are compact and
//! reproduce exactly after a JSON round trip.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{heading_on_polyline_at, Point2, Polyline, RigidTransform};
use crate::lane_graph::{LaneId, RawLaneSegment};
use crate::scenario_io::{LaneRecord, ModeRecord, PredictionFile, ScenarioFile, Xy, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Straight,
    /// Two parallel lanes driven in opposite directions.
    ParallelOpposing,
    Fork,
    Merge,
    /// `segment_count` collinear segments linked head to tail.
    Chain,
    /// A split that rejoins: entry, two branches, exit.
    Diamond,
    /// A closed loop of four quarter arcs.
    Roundabout,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 7] = [
        TopologyKind::Straight,
        TopologyKind::ParallelOpposing,
        TopologyKind::Fork,
        TopologyKind::Merge,
        TopologyKind::Chain,
        TopologyKind::Diamond,
        TopologyKind::Roundabout,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyTemplate {
    pub kind: TopologyKind,
    /// Length of one segment, meters. Roundabout arcs are about this long.
    pub lane_length: f64,
    /// Distance between neighboring lane centerlines, meters.
    pub lane_spacing: f64,
    pub segment_count: usize,
    /// Emit explicit boundaries half a spacing to each side.
    pub boundaries: bool,
}

impl TopologyTemplate {
    pub fn new(kind: TopologyKind) -> Self {
        Self {
            kind,
            lane_length: 50.0,
            lane_spacing: 3.5,
            segment_count: 3,
            boundaries: false,
        }
    }
}

/// Lanes of a topology plus the routes (lane sequences) agents may follow.
#[derive(Debug, Clone)]
pub struct Topology {
    pub lanes: Vec<LaneRecord>,
    pub routes: Vec<Vec<String>>,
}

impl Topology {
    /// The centerline of a route as one polyline.
    pub fn route_line(&self, route: usize) -> Polyline<f64> {
        let mut pts: Vec<Point2<f64>> = Vec::new();
        for id in &self.routes[route] {
            let lane = self.lanes.iter().find(|l| &l.id == id).expect("route lane exists");
            for &[x, y] in &lane.centerline {
                let p = Point2::new(x, y);
                if pts.last() != Some(&p) {
                    pts.push(p);
                }
            }
        }
        Polyline::new(pts).expect("route is a valid polyline")
    }
}

fn mm(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn xy(p: Point2<f64>) -> Xy {
    [mm(p.x), mm(p.y)]
}

fn arc(cx: f64, cy: f64, r: f64, from: f64, to: f64, steps: usize) -> Vec<Point2<f64>> {
    (0..=steps)
        .map(|i| {
            let a = from + (to - from) * i as f64 / steps as f64;
            Point2::new(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

/// Offsets every vertex along the averaged normal of its neighbors.
fn offset(points: &[Point2<f64>], by: f64) -> Vec<Point2<f64>> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let prev = (points[i] - points[i.saturating_sub(1)]) * (1.0 / points[i].distance(points[i.saturating_sub(1)]).max(1e-12));
            let next = (points[(i + 1).min(n - 1)] - points[i]) * (1.0 / points[i].distance(points[(i + 1).min(n - 1)]).max(1e-12));
            let dir = prev + next;
            let normal = dir.perp() * (1.0 / dir.norm());
            points[i] + normal * by
        })
        .collect()
}

pub fn build_topology(t: &TopologyTemplate) -> Topology {
    let (l, w) = (t.lane_length, t.lane_spacing);
    let p = Point2::new;
    let mut lanes: Vec<(String, Vec<Point2<f64>>)> = Vec::new();
    let mut links: Vec<(&str, &str)> = Vec::new();
    let routes: Vec<Vec<&str>>;
    let chain_ids: Vec<String> = (0..t.segment_count.max(1)).map(|i| format!("c{i}")).collect();
    match t.kind {
        TopologyKind::Straight => {
            lanes.push(("a".into(), vec![p(0.0, 0.0), p(l, 0.0)]));
            routes = vec![vec!["a"]];
        }
        TopologyKind::ParallelOpposing => {
            lanes.push(("a".into(), vec![p(0.0, 0.0), p(l, 0.0)]));
            lanes.push(("b".into(), vec![p(l, w), p(0.0, w)]));
            routes = vec![vec!["a"]];
        }
        TopologyKind::Fork => {
            lanes.push(("a".into(), vec![p(0.0, 0.0), p(l, 0.0)]));
            lanes.push(("b".into(), vec![p(l, 0.0), p(2.0 * l, 0.0)]));
            lanes.push(("c".into(), vec![p(l, 0.0), p(1.5 * l, w), p(2.0 * l, 3.0 * w)]));
            links = vec![("a", "b"), ("a", "c")];
            routes = vec![vec!["a", "b"], vec!["a", "c"]];
        }
        TopologyKind::Merge => {
            lanes.push(("a".into(), vec![p(0.0, 0.0), p(l, 0.0)]));
            lanes.push(("b".into(), vec![p(0.0, -3.0 * w), p(0.5 * l, -w), p(l, 0.0)]));
            lanes.push(("c".into(), vec![p(l, 0.0), p(2.0 * l, 0.0)]));
            links = vec![("a", "c"), ("b", "c")];
            routes = vec![vec!["a", "c"], vec!["b", "c"]];
        }
        TopologyKind::Chain => {
            for (i, id) in chain_ids.iter().enumerate() {
                lanes.push((id.clone(), vec![p(i as f64 * l, 0.0), p((i + 1) as f64 * l, 0.0)]));
            }
            links = chain_ids.windows(2).map(|w| (w[0].as_str(), w[1].as_str())).collect();
            routes = vec![chain_ids.iter().map(String::as_str).collect()];
        }
        TopologyKind::Diamond => {
            lanes.push(("a".into(), vec![p(0.0, 0.0), p(l, 0.0)]));
            lanes.push(("b".into(), vec![p(l, 0.0), p(1.5 * l, 2.0 * w), p(2.0 * l, 0.0)]));
            lanes.push(("c".into(), vec![p(l, 0.0), p(1.5 * l, -2.0 * w), p(2.0 * l, 0.0)]));
            lanes.push(("d".into(), vec![p(2.0 * l, 0.0), p(3.0 * l, 0.0)]));
            links = vec![("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")];
            routes = vec![vec!["a", "b", "d"], vec!["a", "c", "d"]];
        }
        TopologyKind::Roundabout => {
            let r = l / (PI / 2.0);
            for q in 0..4 {
                let from = q as f64 * PI / 2.0;
                lanes.push((format!("r{q}"), arc(0.0, 0.0, r, from, from + PI / 2.0, 8)));
            }
            links = vec![("r0", "r1"), ("r1", "r2"), ("r2", "r3"), ("r3", "r0")];
            routes = vec![vec!["r0", "r1", "r2", "r3", "r0", "r1"]];
        }
    }
    let lanes = lanes
        .iter()
        .map(|(id, pts)| {
            let (left, right) = if t.boundaries {
                (
                    Some(offset(pts, w / 2.0).into_iter().map(xy).collect()),
                    Some(offset(pts, -w / 2.0).into_iter().map(xy).collect()),
                )
            } else {
                (None, None)
            };
            LaneRecord {
                id: id.clone(),
                centerline: pts.iter().copied().map(xy).collect(),
                left_boundary: left,
                right_boundary: right,
                successors: links.iter().filter(|(a, _)| a == id).map(|(_, b)| b.to_string()).collect(),
                predecessors: links.iter().filter(|(_, b)| b == id).map(|(a, _)| a.to_string()).collect(),
            }
        })
        .collect();
    Topology {
        lanes,
        routes: routes.into_iter().map(|r| r.into_iter().map(String::from).collect()).collect(),
    }
}

/// Point `s` meters along `line` and `lateral` meters to its left. Beyond
/// either end the line is extended straight.
fn along(line: &Polyline<f64>, s: f64, lateral: f64) -> Point2<f64> {
    let len = line.length();
    let clamped = s.clamp(0.0, len);
    let h = heading_on_polyline_at(line, clamped);
    let dir = Point2::new(h.cos(), h.sin());
    line.point_at(clamped) + dir * (s - clamped) + dir.perp() * lateral
}

/// One predicted mode. Offsets grow linearly from zero at the first future
/// step to the given value at the last.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub route: usize,
    /// Final along-route error, meters (positive is ahead).
    pub longitudinal: f64,
    /// Final lateral error, meters (positive is left).
    pub lateral: f64,
    pub probability: Option<f64>,
}

impl ModeSpec {
    pub fn at(longitudinal: f64, lateral: f64) -> Self {
        Self { route: 0, longitudinal, lateral, probability: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTemplate {
    pub sequence_id: String,
    pub agent_class: String,
    pub topology: TopologyTemplate,
    /// Ground-truth speed, m/s.
    pub speed: f64,
    /// Number of future points.
    pub steps: usize,
    pub dt: f64,
    pub route: usize,
    /// Arc-length on the route where the future starts.
    pub start_s: f64,
    /// Ground-truth distance left of the route centerline.
    pub gt_lateral: f64,
    pub modes: Vec<ModeSpec>,
    /// Uniform jitter added to every predicted coordinate, meters.
    pub noise: f64,
}

impl ScenarioTemplate {
    pub fn new(sequence_id: &str, kind: TopologyKind) -> Self {
        Self {
            sequence_id: sequence_id.into(),
            agent_class: "vehicle".into(),
            topology: TopologyTemplate::new(kind),
            speed: 10.0,
            steps: 30,
            dt: 0.1,
            route: 0,
            start_s: 5.0,
            gt_lateral: 0.0,
            modes: vec![ModeSpec::at(0.0, 0.0)],
            noise: 0.0,
        }
    }
}

/// Scenario and prediction files for `template`. Identical inputs give
/// identical files; `seed` only drives the prediction jitter.
pub fn generate_scenario(template: &ScenarioTemplate, seed: u64) -> (ScenarioFile, PredictionFile) {
    let topo = build_topology(&template.topology);
    generate_on(&topo, template, seed)
}

fn generate_on(topo: &Topology, t: &ScenarioTemplate, seed: u64) -> (ScenarioFile, PredictionFile) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gt_line = topo.route_line(t.route);
    let step = t.speed * t.dt;
    let last = (t.steps.max(2) - 1) as f64;
    let ground_truth_future = (0..t.steps)
        .map(|i| xy(along(&gt_line, t.start_s + step * i as f64, t.gt_lateral)))
        .collect();
    let modes = t
        .modes
        .iter()
        .map(|m| {
            let line = topo.route_line(m.route);
            let points = (0..t.steps)
                .map(|i| {
                    let ramp = i as f64 / last;
                    let q = along(
                        &line,
                        t.start_s + step * i as f64 + m.longitudinal * ramp,
                        t.gt_lateral + m.lateral * ramp,
                    );
                    let jitter = if t.noise > 0.0 {
                        Point2::new(rng.gen_range(-t.noise..t.noise), rng.gen_range(-t.noise..t.noise))
                    } else {
                        Point2::new(0.0, 0.0)
                    };
                    xy(q + jitter)
                })
                .collect();
            ModeRecord { points, probability: m.probability }
        })
        .collect();
    (
        ScenarioFile {
            format_version: FORMAT_VERSION.into(),
            sequence_id: t.sequence_id.clone(),
            focal_agent_class: t.agent_class.clone(),
            dt: t.dt,
            ground_truth_future,
            observed_history: None,
            lane_graph: topo.lanes.clone(),
        },
        PredictionFile {
            format_version: FORMAT_VERSION.into(),
            sequence_id: t.sequence_id.clone(),
            modes,
        },
    )
}

/// A random template with `k` modes sorted by descending probability.
pub fn random_template(rng: &mut impl Rng, sequence_id: &str, k: usize) -> ScenarioTemplate {
    let kind = TopologyKind::ALL[rng.gen_range(0..TopologyKind::ALL.len())];
    let topology = TopologyTemplate {
        kind,
        lane_length: rng.gen_range(25.0..60.0),
        lane_spacing: rng.gen_range(3.0..4.0),
        segment_count: rng.gen_range(2..5),
        boundaries: rng.gen_bool(0.3),
    };
    let topo = build_topology(&topology);
    let route = rng.gen_range(0..topo.routes.len());
    let steps = 30;
    let dt = 0.1;
    let route_len = topo.route_line(route).length();
    // the future must end on the route
    let max_speed = (route_len - 3.0) / (dt * (steps - 1) as f64);
    let speed = if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(1.0..20.0f64).min(max_speed) };
    let travel = speed * dt * (steps - 1) as f64;
    let room = route_len - travel - 2.0;
    let gt_lateral = if rng.gen_bool(0.05) {
        rng.gen_range(8.0..15.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
    } else {
        rng.gen_range(-0.5..0.5)
    };
    let mut weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w = (*w / total * 1000.0).floor() / 1000.0);
    weights.sort_by(|a, b| b.total_cmp(a));
    let modes = weights
        .into_iter()
        .map(|p| ModeSpec {
            route: rng.gen_range(0..topo.routes.len()),
            longitudinal: rng.gen_range(-8.0..8.0),
            lateral: rng.gen_range(-4.0..4.0),
            probability: Some(p),
        })
        .collect();
    let agent_class = match rng.gen_range(0..20) {
        0 => "bus",
        1 => "motorcyclist",
        2 => "pedestrian",
        _ => "vehicle",
    };
    ScenarioTemplate {
        sequence_id: sequence_id.into(),
        agent_class: agent_class.into(),
        topology,
        speed,
        steps,
        dt,
        route,
        start_s: rng.gen_range(0.0..room),
        gt_lateral,
        modes,
        noise: 0.2,
    }
}

/// Sequence `index` of the random dataset for `seed`. Each index draws from
/// its own stream, so any subset can be generated independently.
pub fn random_sequence(seed: u64, index: u64, k: usize) -> (ScenarioFile, PredictionFile) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let t = random_template(&mut rng, &format!("seq-{index:06}"), k);
    let jitter_seed = rng.gen();
    generate_scenario(&t, jitter_seed)
}

pub fn generate_dataset(n: usize, seed: u64, k: usize) -> Vec<(ScenarioFile, PredictionFile)> {
    (0..n as u64).map(|i| random_sequence(seed, i, k)).collect()
}

fn move_points(pts: &mut [Xy], tf: &RigidTransform<f64>) {
    for p in pts {
        let q = tf.apply(Point2::new(p[0], p[1]));
        *p = [q.x, q.y];
    }
}

/// Applies one rigid transform to every coordinate of a sequence.
pub fn transform_sequence(
    scenario: &ScenarioFile,
    predictions: &PredictionFile,
    tf: &RigidTransform<f64>,
) -> (ScenarioFile, PredictionFile) {
    let mut s = scenario.clone();
    let mut p = predictions.clone();
    move_points(&mut s.ground_truth_future, tf);
    if let Some(h) = &mut s.observed_history {
        move_points(h, tf);
    }
    for lane in &mut s.lane_graph {
        move_points(&mut lane.centerline, tf);
        for b in [&mut lane.left_boundary, &mut lane.right_boundary].into_iter().flatten() {
            move_points(b, tf);
        }
    }
    for m in &mut p.modes {
        move_points(&mut m.points, tf);
    }
    (s, p)
}

/// A random lane graph of 2 to `max_segments` straight segments, 5 to 30 m
/// long, with up to two successors each. Loops and self-contained cycles
/// are allowed; geometry is a vertical stack and plays no role.
pub fn random_lane_graph(rng: &mut impl Rng, max_segments: usize) -> Vec<RawLaneSegment<f64>> {
    let n = rng.gen_range(2..=max_segments.max(2));
    let lengths: Vec<f64> = (0..n).map(|_| rng.gen_range(5.0..30.0)).collect();
    (0..n)
        .map(|i| {
            let succ: BTreeSet<usize> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..n)).filter(|&j| j != i).collect();
            RawLaneSegment {
                id: LaneId(format!("g{i:02}")),
                centerline: vec![Point2::new(0.0, 10.0 * i as f64), Point2::new(lengths[i], 10.0 * i as f64)],
                left_boundary: None,
                right_boundary: None,
                successors: succ.into_iter().map(|j| LaneId(format!("g{j:02}"))).collect(),
                predecessors: vec![],
            }
        })
        .collect()
}

/// Constructed scenarios with known labels.
pub mod golden {
    use super::*;

    /// Ground truth 0.5 m left of its lane center; the prediction drifts
    /// 1.5 m further left and ends just across the boundary on the opposing
    /// lane. Euclidean hit, lane miss.
    pub fn opposing_lane() -> ScenarioTemplate {
        let mut t = ScenarioTemplate::new("opposing-lane", TopologyKind::ParallelOpposing);
        t.topology.boundaries = true;
        t.gt_lateral = 0.5;
        t.modes = vec![ModeSpec::at(0.0, 1.5)];
        t
    }

    /// 15 m/s gives s_hit = 3.7 m; the prediction ends 3 m ahead on the
    /// same lane. Euclidean miss, lane hit.
    pub fn far_ahead_same_lane() -> ScenarioTemplate {
        let mut t = ScenarioTemplate::new("far-ahead-same-lane", TopologyKind::Straight);
        t.topology.boundaries = true;
        t.topology.lane_length = 80.0;
        t.speed = 15.0;
        t.modes = vec![ModeSpec::at(3.0, 0.0)];
        t
    }

    /// Ground truth well off the road. The first mode ends 0.5 m from it,
    /// the second 5 m; the radius fallback decides.
    pub fn ground_truth_off_road() -> ScenarioTemplate {
        let mut t = ScenarioTemplate::new("ground-truth-off-road", TopologyKind::Straight);
        t.topology.boundaries = true;
        t.gt_lateral = 8.0;
        t.modes = vec![
            ModeSpec { probability: Some(0.6), ..ModeSpec::at(0.5, 0.0) },
            ModeSpec { probability: Some(0.4), ..ModeSpec::at(5.0, 0.0) },
        ];
        t
    }

    /// Ground truth on the lane, prediction endpoint 2.5 m to the side and
    /// off the road.
    pub fn prediction_off_road() -> ScenarioTemplate {
        let mut t = ScenarioTemplate::new("prediction-off-road", TopologyKind::Straight);
        t.topology.boundaries = true;
        t.modes = vec![ModeSpec::at(0.0, 2.5)];
        t
    }

    /// Exact prediction on a straight road.
    pub fn exact() -> ScenarioTemplate {
        let mut t = ScenarioTemplate::new("exact", TopologyKind::Straight);
        t.modes = vec![ModeSpec::at(0.0, 0.0)];
        t
    }

    pub fn all() -> Vec<ScenarioTemplate> {
        vec![opposing_lane(), far_ahead_same_lane(), ground_truth_off_road(), prediction_off_road(), exact()]
    }
}
