//! JSON scenario and prediction files, plus report rendering.
//!
//! The schemas are documented in `docs/file-format.md`. Coordinates are
//! `[x, y]` pairs in meters.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::lane_graph::{build_lane_graph, LaneId, RawLaneSegment};
use crate::map::{LaneMap, MapConfig};
use crate::metrics::{MetricReport, PredictionSet, Sequence, Trajectory};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: &str = "1";
pub const SCENARIO_SUFFIX: &str = ".scenario.json";
pub const PREDICTION_SUFFIX: &str = ".prediction.json";

pub type Xy = [f64; 2];

/// Lane ids may be written as strings or integers; they are kept as strings.
fn lane_id<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        Text(String),
        Int(i64),
    }
    Ok(match Id::deserialize(d)? {
        Id::Text(s) => s,
        Id::Int(i) => i.to_string(),
    })
}

fn lane_ids<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    struct Wrapped(#[serde(deserialize_with = "lane_id")] String);
    Ok(Vec::<Wrapped>::deserialize(d)?.into_iter().map(|w| w.0).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneRecord {
    #[serde(deserialize_with = "lane_id")]
    pub id: String,
    pub centerline: Vec<Xy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_boundary: Option<Vec<Xy>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_boundary: Option<Vec<Xy>>,
    #[serde(default, deserialize_with = "lane_ids")]
    pub successors: Vec<String>,
    #[serde(default, deserialize_with = "lane_ids")]
    pub predecessors: Vec<String>,
}

/// One sequence: focal-agent future plus the local lane graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format_version: String,
    pub sequence_id: String,
    pub focal_agent_class: String,
    pub dt: f64,
    pub ground_truth_future: Vec<Xy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_history: Option<Vec<Xy>>,
    pub lane_graph: Vec<LaneRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRecord {
    pub points: Vec<Xy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

/// Predicted modes for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionFile {
    pub format_version: String,
    pub sequence_id: String,
    pub modes: Vec<ModeRecord>,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| schema("<root>", e.to_string()))?;
    Ok(value)
}

fn check_points(field: &str, pts: &[Xy], min: usize) -> Result<()> {
    if pts.len() < min {
        return Err(schema(field, format!("needs >= {min} points, got {}", pts.len())));
    }
    if let Some(i) = pts.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(schema(format!("{field}[{i}]"), "non-finite coordinate"));
    }
    Ok(())
}

fn check_version(v: &str) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(schema("format_version", format!("unsupported version {v:?}, expected {FORMAT_VERSION:?}")));
    }
    Ok(())
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<()> {
        check_version(&self.format_version)?;
        if self.sequence_id.is_empty() {
            return Err(schema("sequence_id", "must not be empty"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(schema("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.ground_truth_future.len() < 2 {
            return Err(schema(
                "ground_truth_future",
                format!("ground truth needs >= 2 points, got {}", self.ground_truth_future.len()),
            ));
        }
        check_points("ground_truth_future", &self.ground_truth_future, 2)?;
        if let Some(h) = &self.observed_history {
            check_points("observed_history", h, 0)?;
        }
        if self.lane_graph.is_empty() {
            return Err(schema("lane_graph", "empty lane graph"));
        }
        let mut seen = BTreeSet::new();
        for (i, lane) in self.lane_graph.iter().enumerate() {
            if !seen.insert(lane.id.as_str()) {
                return Err(schema(format!("lane_graph[{i}].id"), format!("duplicate lane id {}", lane.id)));
            }
            check_points(&format!("lane_graph[{i}].centerline"), &lane.centerline, 2)?;
            for (name, b) in [("left_boundary", &lane.left_boundary), ("right_boundary", &lane.right_boundary)] {
                if let Some(b) = b {
                    check_points(&format!("lane_graph[{i}].{name}"), b, 2)?;
                }
            }
            if lane.left_boundary.is_some() != lane.right_boundary.is_some() {
                return Err(schema(format!("lane_graph[{i}]"), "boundaries must be given as a left/right pair"));
            }
        }
        Ok(())
    }

    pub fn raw_lanes<T: Scalar>(&self) -> Vec<RawLaneSegment<T>> {
        self.lane_graph
            .iter()
            .map(|l| RawLaneSegment {
                id: LaneId(l.id.clone()),
                centerline: to_points(&l.centerline),
                left_boundary: l.left_boundary.as_deref().map(to_points),
                right_boundary: l.right_boundary.as_deref().map(to_points),
                successors: l.successors.iter().cloned().map(LaneId).collect(),
                predecessors: l.predecessors.iter().cloned().map(LaneId).collect(),
            })
            .collect()
    }

    pub fn ground_truth<T: Scalar>(&self) -> Result<Trajectory<T>> {
        Trajectory::new(to_points(&self.ground_truth_future), T::of(self.dt))
    }
}

impl PredictionFile {
    pub fn validate(&self) -> Result<()> {
        check_version(&self.format_version)?;
        if self.modes.is_empty() {
            return Err(schema("modes", "no prediction modes"));
        }
        let len = self.modes[0].points.len();
        for (i, m) in self.modes.iter().enumerate() {
            check_points(&format!("modes[{i}].points"), &m.points, 1)?;
            if m.points.len() != len {
                return Err(schema(
                    format!("modes[{i}].points"),
                    format!("mode has {} points, mode 0 has {len}", m.points.len()),
                ));
            }
            if m.probability.is_some() != self.modes[0].probability.is_some() {
                return Err(schema(format!("modes[{i}].probability"), "probabilities must be given for all modes or none"));
            }
            if let Some(p) = m.probability {
                if !(0.0..=1.0).contains(&p) {
                    return Err(schema(format!("modes[{i}].probability"), format!("{p} outside [0, 1]")));
                }
            }
        }
        let total: f64 = self.modes.iter().filter_map(|m| m.probability).sum();
        if total > 1.0 + 1e-6 {
            return Err(schema("modes", format!("probabilities sum to {total} > 1")));
        }
        Ok(())
    }

    /// Stable sort by descending probability; no-op without probabilities.
    pub fn sort_modes(&mut self) {
        if self.modes.iter().all(|m| m.probability.is_some()) {
            self.modes
                .sort_by(|a, b| b.probability.partial_cmp(&a.probability).expect("validated probabilities"));
        }
    }

    pub fn prediction_set<T: Scalar>(&self, dt: f64) -> Result<PredictionSet<T>> {
        let modes = self
            .modes
            .iter()
            .map(|m| Trajectory::new(to_points(&m.points), T::of(dt)))
            .collect::<Result<Vec<_>>>()?;
        let probs = self
            .modes
            .iter()
            .map(|m| m.probability.map(T::of))
            .collect::<Option<Vec<T>>>();
        PredictionSet::new(modes, probs)
    }
}

fn to_points<T: Scalar>(pts: &[Xy]) -> Vec<Point2<T>> {
    pts.iter().map(|p| Point2::new(T::of(p[0]), T::of(p[1]))).collect()
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let s: ScenarioFile = parse(text)?;
    s.validate()?;
    Ok(s)
}

pub fn parse_predictions(text: &str) -> Result<PredictionFile> {
    let mut p: PredictionFile = parse(text)?;
    p.validate()?;
    p.sort_modes();
    Ok(p)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_scenario(&text).map_err(|e| e.in_file(path))
}

pub fn load_predictions(path: &Path) -> Result<PredictionFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_predictions(&text).map_err(|e| e.in_file(path))
}

/// Compact single-line JSON followed by a newline.
pub fn to_json_line<S: Serialize>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_scenario(dir: &Path, scenario: &ScenarioFile) -> Result<PathBuf> {
    let path = dir.join(format!("{}{SCENARIO_SUFFIX}", scenario.sequence_id));
    std::fs::write(&path, to_json_line(scenario)?)?;
    Ok(path)
}

pub fn write_predictions(dir: &Path, predictions: &PredictionFile) -> Result<PathBuf> {
    let path = dir.join(format!("{}{PREDICTION_SUFFIX}", predictions.sequence_id));
    std::fs::write(&path, to_json_line(predictions)?)?;
    Ok(path)
}

/// Sequence id encoded in a file name with the given suffix.
pub fn sequence_id_from_path<'a>(path: &'a Path, suffix: &str) -> Option<&'a str> {
    path.file_name()?.to_str()?.strip_suffix(suffix).filter(|s| !s.is_empty())
}

/// Builds an evaluable sequence from a matched pair of files.
pub fn build_sequence<T: Scalar>(
    scenario: &ScenarioFile,
    predictions: &PredictionFile,
    map_cfg: &MapConfig<T>,
) -> Result<Sequence<T>> {
    if scenario.sequence_id != predictions.sequence_id {
        return Err(schema(
            "sequence_id",
            format!(
                "prediction file is for {:?}, scenario is {:?}",
                predictions.sequence_id, scenario.sequence_id
            ),
        ));
    }
    let ground_truth = scenario.ground_truth()?;
    let preds = predictions.prediction_set(scenario.dt)?;
    if preds.modes()[0].len() != ground_truth.len() {
        return Err(schema(
            "modes",
            format!(
                "modes have {} points, ground truth has {}",
                preds.modes()[0].len(),
                ground_truth.len()
            ),
        ));
    }
    let graph = build_lane_graph(scenario.raw_lanes())?;
    Ok(Sequence {
        id: scenario.sequence_id.clone(),
        focal_agent_class: scenario.focal_agent_class.clone(),
        ground_truth,
        predictions: preds,
        map: Arc::new(LaneMap::new(graph, map_cfg)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Json,
    Csv,
    #[default]
    Table,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "table" => Ok(Self::Table),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}, expected json, csv or table"))),
        }
    }
}

/// Renders a report. Machine formats carry ratios as fractions; the table
/// shows them as percentages with two decimals.
pub fn write_report(report: &MetricReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(report)?;
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Table => Ok(render_table(report)),
    }
}

fn render_table(r: &MetricReport) -> String {
    let pct = |x: f64| format!("{:.2}", x * 100.0);
    let mut out = String::new();
    let _ = writeln!(out, "{:<6} {:>8} {:>8} {:>8} {:>8}", "", "minADE", "minFDE", "MR", "LMR");
    let _ = writeln!(
        out,
        "{:<6} {:>8.2} {:>8.2} {:>8} {:>8}",
        "k=1",
        r.min_ade_at_1,
        r.min_fde_at_1,
        pct(r.mr_at_1),
        pct(r.lmr_at_1)
    );
    let _ = writeln!(
        out,
        "{:<6} {:>8.2} {:>8.2} {:>8} {:>8}",
        format!("k={}", r.k),
        r.min_ade_at_k,
        r.min_fde_at_k,
        pct(r.mr_at_k),
        pct(r.lmr_at_k)
    );
    let _ = writeln!(
        out,
        "sequences: {}  fallback: {}  filtered: {}",
        r.sequence_count, r.fallback_count, r.filtered_count
    );
    out
}

/// Parses a report written as JSON.
pub fn parse_report(text: &str) -> Result<MetricReport> {
    parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"{
  "format_version": "1",
  "sequence_id": "seq-1",
  "focal_agent_class": "vehicle",
  "dt": 0.1,
  "ground_truth_future": [[0.0, 0.0], [1.0, 0.0]],
  "lane_graph": [
    {"id": "a", "centerline": [[0.0, 0.0], [10.0, 0.0]]}
  ]
}"#;

    fn report() -> MetricReport {
        MetricReport {
            sequence_count: 3,
            k: 6,
            lmr_at_1: 2.0 / 3.0,
            lmr_at_k: 1.0 / 3.0,
            mr_at_1: 1.0,
            mr_at_k: 0.0,
            min_ade_at_1: 2.22,
            min_fde_at_1: 6.0,
            min_ade_at_k: 0.9,
            min_fde_at_k: 1.71,
            fallback_count: 0,
            filtered_count: 1,
        }
    }

    #[test]
    fn minimal_scenario_parses() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.lane_graph.len(), 1);
        assert_eq!(s.ground_truth::<f64>().unwrap().len(), 2);
    }

    #[test]
    fn integer_lane_ids_accepted() {
        let text = MINIMAL.replace(r#""id": "a""#, r#""id": 42, "successors": [7]"#);
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.lane_graph[0].id, "42");
        assert_eq!(s.lane_graph[0].successors, vec!["7".to_string()]);
    }

    #[test]
    fn short_future_rejected() {
        let text = MINIMAL.replace("[[0.0, 0.0], [1.0, 0.0]]", "[[0.0, 0.0]]");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("ground truth needs >= 2 points"), "{err}");
    }

    #[test]
    fn duplicate_lane_rejected() {
        let text = MINIMAL.replace(
            r#"{"id": "a", "centerline": [[0.0, 0.0], [10.0, 0.0]]}"#,
            r#"{"id": "a", "centerline": [[0.0, 0.0], [10.0, 0.0]]}, {"id": "a", "centerline": [[0.0, 1.0], [10.0, 1.0]]}"#,
        );
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("duplicate lane id a"), "{err}");
    }

    #[test]
    fn schema_errors_carry_path_and_line() {
        let text = MINIMAL.replace(r#""dt": 0.1"#, r#""dt": "fast""#);
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("dt") && err.contains("line 5"), "{err}");
        let text = MINIMAL.replace("[10.0, 0.0]]}", "[10.0, \"x\"]]}");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("lane_graph[0].centerline[1]"), "{err}");
        let err = parse_scenario(&MINIMAL.replace("\"1\"", "\"2\"")).unwrap_err().to_string();
        assert!(err.contains("format_version"), "{err}");
        assert!(parse_scenario("{").is_err());
        assert!(parse_scenario(&MINIMAL.replace("\"dt\"", "\"extra\": 1, \"dt\"")).is_err());
    }

    #[test]
    fn non_finite_coordinate_named() {
        let mut s = parse_scenario(MINIMAL).unwrap();
        s.ground_truth_future[1][0] = f64::INFINITY;
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("ground_truth_future[1]"), "{err}");
    }

    fn preds_json(probs: &[Option<f64>], lens: &[usize]) -> String {
        let modes: Vec<ModeRecord> = probs
            .iter()
            .zip(lens)
            .enumerate()
            .map(|(i, (&probability, &n))| ModeRecord {
                points: (0..n).map(|j| [j as f64, i as f64]).collect(),
                probability,
            })
            .collect();
        serde_json::to_string(&PredictionFile { format_version: "1".into(), sequence_id: "s".into(), modes }).unwrap()
    }

    #[test]
    fn predictions_sorted_by_probability() {
        let probs = [0.1, 0.3, 0.2, 0.15, 0.15, 0.1].map(Some);
        let p = parse_predictions(&preds_json(&probs, &[3; 6])).unwrap();
        assert_eq!(p.modes[0].probability, Some(0.3));
        assert_eq!(p.modes[0].points[0][1], 1.0);
        // ties keep file order
        assert_eq!(p.modes[2].points[0][1], 3.0);
        assert_eq!(p.modes[3].points[0][1], 4.0);
    }

    #[test]
    fn predictions_without_probabilities_keep_order() {
        let p = parse_predictions(&preds_json(&[None; 3], &[3; 3])).unwrap();
        assert_eq!(p.modes.iter().map(|m| m.points[0][1]).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn mismatched_predictions_rejected() {
        assert!(parse_predictions(&preds_json(&[None; 2], &[3, 4])).is_err());
        assert!(parse_predictions(&preds_json(&[Some(0.5), None], &[3, 3])).is_err());
        assert!(parse_predictions(&preds_json(&[Some(0.7), Some(0.7)], &[3, 3])).is_err());
        assert!(parse_predictions(&preds_json(&[], &[])).is_err());
    }

    #[test]
    fn report_formats() {
        let r = report();
        let table = write_report(&r, ReportFormat::Table).unwrap();
        assert!(table.contains("66.67") && table.contains("33.33"), "{table}");
        let csv = write_report(&r, ReportFormat::Csv).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("sequence_count,k,lmr_at_1"));
        let json = write_report(&r, ReportFormat::Json).unwrap();
        assert_eq!(parse_report(&json).unwrap(), r);
        assert!("xml".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn sequence_id_from_file_name() {
        assert_eq!(sequence_id_from_path(Path::new("d/abc.scenario.json"), SCENARIO_SUFFIX), Some("abc"));
        assert_eq!(sequence_id_from_path(Path::new("d/abc.json"), SCENARIO_SUFFIX), None);
    }

    fn arb_xy() -> impl Strategy<Value = Xy> {
        (-1e5..1e5f64, -1e5..1e5f64).prop_map(|(x, y)| [x, y])
    }

    proptest! {
        #[test]
        fn scenario_round_trips(
            gt in prop::collection::vec(arb_xy(), 2..20),
            center in prop::collection::vec(arb_xy(), 2..6),
            dt in 0.01..1.0f64,
            history in prop::option::of(prop::collection::vec(arb_xy(), 0..5)),
        ) {
            let s = ScenarioFile {
                format_version: "1".into(),
                sequence_id: "x".into(),
                focal_agent_class: "bus".into(),
                dt,
                ground_truth_future: gt,
                observed_history: history,
                lane_graph: vec![LaneRecord {
                    id: "l".into(),
                    centerline: center.clone(),
                    left_boundary: Some(center.clone()),
                    right_boundary: Some(center),
                    successors: vec![],
                    predecessors: vec!["zz".into()],
                }],
            };
            prop_assert_eq!(parse_scenario(&to_json_line(&s).unwrap()).unwrap(), s);
        }

        #[test]
        fn predictions_round_trip(modes in prop::collection::vec(prop::collection::vec(arb_xy(), 4), 1..7)) {
            let n = modes.len() as f64;
            let p = PredictionFile {
                format_version: "1".into(),
                sequence_id: "x".into(),
                modes: modes
                    .into_iter()
                    .enumerate()
                    .map(|(i, points)| ModeRecord { points, probability: Some((n - i as f64) / (n * n)) })
                    .collect(),
            };
            prop_assert_eq!(parse_predictions(&to_json_line(&p).unwrap()).unwrap(), p);
        }
    }
}
