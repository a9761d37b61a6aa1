//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use lmr_cli::{generate, generated_dirs, run, RunConfig};
use lmr_core::scenario_io::{
    build_sequence, load_predictions, load_scenario, to_json_line, write_report, ModeRecord, PredictionFile,
    ReportFormat, ScenarioFile, PREDICTION_SUFFIX, SCENARIO_SUFFIX,
};
use lmr_core::testkit::{generate_dataset, generate_scenario, golden, random_lane_graph, transform_sequence};
use lmr_core::{
    build_lane_graph, confidence, evaluate_dataset, evaluate_sequence, hit_threshold, oracle_lane_distance,
    within_lane_distance, AssignmentConfig, IndexMode, LaneIdx, LanePoint, MapConfig, MetricConfig, MetricReport,
    RigidTransform, Sequence, SequenceResult,
};

type Files = Vec<(ScenarioFile, PredictionFile)>;
type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn golden_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden"))
}

fn sequences(files: &[(ScenarioFile, PredictionFile)], mode: IndexMode) -> Vec<Sequence<f64>> {
    let map = MapConfig { index_mode: mode, ..MapConfig::default() };
    files.iter().map(|(s, p)| build_sequence(s, p, &map).unwrap()).collect()
}

/// Every class, so random datasets are evaluated in full.
fn all_classes() -> MetricConfig<f64> {
    let mut cfg = MetricConfig::default();
    cfg.agent_classes.insert("pedestrian".into());
    cfg
}

fn threshold_calibration() -> Outcome {
    let s_hit: f64 = hit_threshold(6.67, &MetricConfig::default());
    let err = (s_hit - 2.034).abs();
    outcome(err <= 1e-9, format!("s_hit(6.67 m/s) = {s_hit:.12} m, |err| = {err:.1e} (tol 1e-9)"))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2e);
    let (mut trials, mut agree, mut reached, mut worst) = (0, 0, 0, 0.0f64);
    for _ in 0..500 {
        let g = build_lane_graph(random_lane_graph(&mut rng, 20)).unwrap();
        for _ in 0..10 {
            let mut pick = || {
                let seg = LaneIdx(rng.gen_range(0..g.len()));
                LanePoint::new(seg, rng.gen_range(0.0..=g[seg].length()))
            };
            let (from, to) = (pick(), pick());
            let threshold = rng.gen_range(1.0..45.0);
            let fast = within_lane_distance(&g, from, &[to], threshold).unwrap();
            let slow = oracle_lane_distance(&g, from, to, threshold).unwrap().filter(|&d| d < threshold);
            trials += 1;
            let mut ok = fast.reached == slow.is_some();
            if let (Some(a), Some(b)) = (fast.distance, slow) {
                reached += 1;
                worst = worst.max((a - b).abs());
                ok &= (a - b).abs() <= 1e-9;
            }
            agree += usize::from(ok);
        }
    }
    outcome(
        agree == trials,
        format!(
            "500 graphs, {agree}/{trials} queries agree ({reached} reached), max |dist err| = {worst:.1e} (tol 1e-9), {:.2} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

#[derive(Debug, Deserialize)]
struct Expected {
    sequence_id: String,
    lane_labels: Vec<u8>,
    fallback: bool,
    mr_at_1: u8,
    mr_at_k: u8,
    min_fde_at_k: f64,
}

/// Evaluates one committed golden sequence with k equal to its mode count.
fn golden_result(id: &str) -> Result<SequenceResult, String> {
    let s = load_scenario(&golden_dir().join("dataset").join(format!("{id}{SCENARIO_SUFFIX}"))).map_err(|e| e.to_string())?;
    let p = load_predictions(&golden_dir().join("predictions").join(format!("{id}{PREDICTION_SUFFIX}")))
        .map_err(|e| e.to_string())?;
    let seq = build_sequence::<f64>(&s, &p, &MapConfig::default()).map_err(|e| e.to_string())?;
    evaluate_sequence(&seq, &MetricConfig::default()).map_err(|e| e.to_string())
}

fn check_golden(ids: &[&str]) -> (bool, Vec<String>) {
    let text = fs::read_to_string(golden_dir().join("expected.json")).expect("expected.json");
    let expected: Vec<Expected> = serde_json::from_str(&text).expect("expected.json parses");
    let mut ok = true;
    let mut notes = Vec::new();
    for id in ids {
        let e = expected.iter().find(|e| e.sequence_id == *id).expect("expected entry");
        match golden_result(id) {
            Ok(r) => {
                let same = r.lane.labels == e.lane_labels
                    && r.lane.fallback == e.fallback
                    && r.euclidean.mr_at_1 == e.mr_at_1
                    && r.euclidean.mr_at_k == e.mr_at_k
                    && (r.euclidean.min_fde_at_k - e.min_fde_at_k).abs() < 1e-9;
                ok &= same;
                notes.push(format!(
                    "{id}: MR@1={} LMR={:?} fallback={}{}",
                    r.euclidean.mr_at_1,
                    r.lane.labels,
                    r.lane.fallback,
                    if same { "" } else { " (MISMATCH)" }
                ));
            }
            Err(err) => {
                ok = false;
                notes.push(format!("{id}: {err}"));
            }
        }
    }
    (ok, notes)
}

/// Committed files must equal what the generator produces today.
fn golden_files_current() -> bool {
    golden::all().iter().all(|t| {
        let (s, p) = generate_scenario(t, 0);
        let read = |dir: &str, suffix: &str| fs::read_to_string(golden_dir().join(dir).join(format!("{}{suffix}", t.sequence_id)));
        read("dataset", SCENARIO_SUFFIX).ok() == to_json_line(&s).ok()
            && read("predictions", PREDICTION_SUFFIX).ok() == to_json_line(&p).ok()
    })
}

fn lane_vs_radius_semantics() -> Outcome {
    let (ok, notes) = check_golden(&["opposing-lane", "far-ahead-same-lane"]);
    let current = golden_files_current();
    outcome(ok && current, format!("{}; files match generator: {current}", notes.join("; ")))
}

fn ordering_invariants() -> Outcome {
    let start = Instant::now();
    let files = generate_dataset(1000, 0x0de7, 6);
    let cfg = all_classes();
    let (base, base_rows) = evaluate_dataset(&sequences(&files, IndexMode::RTree), &cfg, 1).unwrap();
    let mut ok = base.lmr_at_k <= base.lmr_at_1 && base.mr_at_k <= base.mr_at_1;
    ok &= base_rows.iter().all(|r| {
        let all = r.lane.labels.iter().all(|&x| x == 1);
        (!all || r.lane.labels[0] == 1) && r.euclidean.mr_at_k <= r.euclidean.mr_at_1
    });

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let extended: Files = files
        .iter()
        .map(|(s, p)| {
            let mut p = p.clone();
            let probs: Vec<f64> = p.modes.iter().map(|m| m.probability.unwrap()).collect();
            let spare = 1.0 - probs.iter().sum::<f64>();
            let lowest = probs.iter().copied().fold(f64::INFINITY, f64::min);
            let spread = if rng.gen_bool(0.5) { 0.5 } else { 6.0 };
            let (dx, dy) = (rng.gen_range(-spread..spread), rng.gen_range(-spread..spread));
            p.modes.push(ModeRecord {
                points: s.ground_truth_future.iter().map(|q| [q[0] + dx, q[1] + dy]).collect(),
                probability: Some(spare.min(lowest) / 2.0),
            });
            (s.clone(), p)
        })
        .collect();
    let (more, more_rows) = evaluate_dataset(&sequences(&extended, IndexMode::RTree), &cfg, 1).unwrap();
    ok &= more.k == 7
        && more.lmr_at_k <= base.lmr_at_k
        && more.mr_at_k <= base.mr_at_k
        && more.lmr_at_1 == base.lmr_at_1
        && more.mr_at_1 == base.mr_at_1;
    ok &= base_rows
        .iter()
        .zip(&more_rows)
        .all(|(a, b)| b.lane.labels[..6] == a.lane.labels[..]);
    outcome(
        ok,
        format!(
            "1000 sequences: LMR@6 {:.4} <= LMR@1 {:.4}, MR@6 {:.4} <= MR@1 {:.4}; \
             with a 7th lowest-probability mode: LMR@k {:.4}, MR@k {:.4}, @1 unchanged; {:.2} s",
            base.lmr_at_k,
            base.lmr_at_1,
            base.mr_at_k,
            base.mr_at_1,
            more.lmr_at_k,
            more.mr_at_k,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn rigid_invariance() -> Outcome {
    let files = generate_dataset(100, 0x5161, 6);
    let tf = RigidTransform::new(-1.234, 4_321.5, -987.25);
    let moved: Files = files.iter().map(|(s, p)| transform_sequence(s, p, &tf)).collect();
    let cfg = all_classes();
    let (a, _) = evaluate_dataset(&sequences(&files, IndexMode::RTree), &cfg, 1).unwrap();
    let (b, _) = evaluate_dataset(&sequences(&moved, IndexMode::RTree), &cfg, 1).unwrap();
    let rates_equal = a.lmr_at_1.to_bits() == b.lmr_at_1.to_bits()
        && a.lmr_at_k.to_bits() == b.lmr_at_k.to_bits()
        && a.mr_at_1.to_bits() == b.mr_at_1.to_bits()
        && a.mr_at_k.to_bits() == b.mr_at_k.to_bits();
    let worst = [
        (a.min_ade_at_1 - b.min_ade_at_1).abs(),
        (a.min_fde_at_1 - b.min_fde_at_1).abs(),
        (a.min_ade_at_k - b.min_ade_at_k).abs(),
        (a.min_fde_at_k - b.min_fde_at_k).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    outcome(
        rates_equal && worst <= 1e-6,
        format!(
            "100 sequences: miss rates bit-identical: {rates_equal} (LMR@1 {:.4}, LMR@6 {:.4}), max ADE/FDE diff {worst:.1e} m (tol 1e-6)",
            a.lmr_at_1, a.lmr_at_k
        ),
    )
}

fn machine_reports(r: &MetricReport) -> String {
    write_report(r, ReportFormat::Json).unwrap() + &write_report(r, ReportFormat::Csv).unwrap()
}

fn determinism() -> Outcome {
    const N: usize = 25_000;
    let cfg = all_classes();

    // in memory: tree and scan maps, three worker counts
    let files = generate_dataset(N, 0xd7e, 6);
    let tree = sequences(&files, IndexMode::RTree);
    let scan = sequences(&files, IndexMode::LinearScan);
    drop(files);
    let reference = machine_reports(&evaluate_dataset(&tree, &cfg, 1).unwrap().0);
    let mut same = true;
    for workers in [1, 4, 16] {
        same &= machine_reports(&evaluate_dataset(&tree, &cfg, workers).unwrap().0) == reference;
        same &= machine_reports(&evaluate_dataset(&scan, &cfg, workers).unwrap().0) == reference;
    }
    drop((tree, scan));

    // from files through the runner
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), Some(N), 0xd7e, 6, 16).unwrap();
    let (d, p) = generated_dirs(dir.path());
    let mut run_cfg = RunConfig::new(d, p);
    run_cfg.metric = cfg;
    run_cfg.format = ReportFormat::Json;
    run_cfg.output = Some(dir.path().join("report.json"));
    run_cfg.workers = 16;
    let start = Instant::now();
    let full = run(&run_cfg).unwrap();
    let wall = start.elapsed().as_secs_f64();
    same &= full.rendered == write_report(&full.report, ReportFormat::Json).unwrap();
    same &= machine_reports(&full.report) == reference;
    for (workers, linear) in [(1, false), (4, true), (16, true)] {
        run_cfg.workers = workers;
        run_cfg.linear_scan = linear;
        same &= run(&run_cfg).unwrap().rendered == full.rendered;
    }
    let cpus = lmr_cli::default_workers();
    outcome(
        same && full.report.sequence_count == N,
        format!(
            "{N} sequences: JSON/CSV reports byte-identical across workers 1/4/16 and tree/linear scan: {same}; \
             file run with 16 workers took {wall:.1} s on {cpus} CPU(s) (target < 60 s)"
        ),
    )
}

fn special_cases() -> Outcome {
    let (mut ok, notes) = check_golden(&["ground-truth-off-road", "prediction-off-road"]);
    let r = golden_result("ground-truth-off-road").map(|r| lmr_core::aggregate(&[r], 0).unwrap());
    let fallback = r.as_ref().map(|r| r.fallback_count).unwrap_or(0);
    ok &= fallback == 1;
    outcome(ok, format!("{}; fallback_count = {fallback}", notes.join("; ")))
}

fn formula_sweep() -> Outcome {
    let cfg = AssignmentConfig::default();
    // hand-evaluated values for c_dist = 5 m, c_orient = pi, w = 0.5
    let ds = [(0.0, 1.0), (1.25, 0.75), (2.5, 0.5), (5.0, 0.0), (6.0, 0.0)];
    let angles = [(0.0, 1.0), (PI / 4.0, 0.75), (PI / 2.0, 0.5), (PI, 0.0)];
    let mut worst = 0.0f64;
    for (d, pd) in ds {
        for (a, pa) in angles {
            let c = confidence(d, Some(a), &cfg);
            let expected_p = 0.5 * pd + 0.5 * pa;
            worst = worst
                .max((c.p_d - pd).abs())
                .max((c.p_alpha.unwrap() - pa).abs())
                .max((c.p - expected_p).abs());
        }
    }
    outcome(worst <= 1e-12, format!("20 grid points, max |err| = {worst:.1e} (tol 1e-12)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("threshold calibration", threshold_calibration),
        ("oracle equivalence", oracle_equivalence),
        ("opposing lane / far ahead semantics", lane_vs_radius_semantics),
        ("miss-rate ordering invariants", ordering_invariants),
        ("rigid-transform invariance", rigid_invariance),
        ("determinism and differential runs", determinism),
        ("special cases", special_cases),
        ("confidence formula sweep", formula_sweep),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} criterion {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
