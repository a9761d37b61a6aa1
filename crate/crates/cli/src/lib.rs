//! Directory-level evaluation and synthetic data generation behind the `lmr`
//! binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use lmr_core::scenario_io::{
    build_sequence, load_predictions, load_scenario, sequence_id_from_path, to_json_line, write_predictions,
    write_report, write_scenario, ReportFormat, PREDICTION_SUFFIX, SCENARIO_SUFFIX,
};
use lmr_core::testkit::{generate_scenario, golden, random_sequence};
use lmr_core::{evaluate_dataset, Error, IndexMode, MapConfig, MetricConfig, MetricReport, PredictionSet, Sequence};

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    pub predictions_dir: PathBuf,
    pub k: usize,
    pub metric: MetricConfig<f64>,
    pub half_width: f64,
    pub workers: usize,
    /// `None` writes the report to stdout.
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
    pub linear_scan: bool,
    pub skip_invalid: bool,
    /// JSON lines file with one record per evaluated sequence.
    pub per_sequence_dump: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(dataset_dir: impl Into<PathBuf>, predictions_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset_dir: dataset_dir.into(),
            predictions_dir: predictions_dir.into(),
            k: 6,
            metric: MetricConfig::default(),
            half_width: lmr_core::lane_graph::DEFAULT_HALF_WIDTH,
            workers: default_workers(),
            output: None,
            format: ReportFormat::Table,
            linear_scan: false,
            skip_invalid: false,
            per_sequence_dump: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.half_width.is_nan() || self.half_width <= 0.0 {
            return Err(CliError::Config(format!("half width must be positive, got {}", self.half_width)));
        }
        self.metric.validate()?;
        Ok(())
    }

    fn map_config(&self) -> MapConfig<f64> {
        MapConfig {
            half_width: self.half_width,
            inflate: None,
            index_mode: if self.linear_scan { IndexMode::LinearScan } else { IndexMode::RTree },
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Counts reported next to the metrics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub unmatched_scenarios: usize,
    pub unmatched_predictions: usize,
    pub skipped_invalid: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MetricReport,
    /// The report as written to the output.
    pub rendered: String,
    pub stats: RunStats,
}

/// The first `k` modes of a probability-sorted prediction set.
pub fn truncate_modes(preds: &PredictionSet<f64>, k: usize, sequence_id: &str) -> Result<PredictionSet<f64>, Error> {
    preds.top_k(k).ok_or_else(|| Error::NotEnoughModes {
        sequence_id: sequence_id.to_string(),
        available: preds.k(),
        requested: k,
    })
}

fn files_by_id(dir: &Path, suffix: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if let Some(id) = sequence_id_from_path(&path, suffix) {
            out.insert(id.to_string(), path.clone());
        }
    }
    Ok(out)
}

fn load_pair(scenario: &Path, predictions: &Path, cfg: &RunConfig, map: &MapConfig<f64>) -> Result<Sequence<f64>, Error> {
    let s = load_scenario(scenario)?;
    let p = load_predictions(predictions)?;
    let mut seq = build_sequence(&s, &p, map).map_err(|e| Error::File {
        file: scenario.to_path_buf(),
        source: Box::new(e),
    })?;
    seq.predictions = truncate_modes(&seq.predictions, cfg.k, &seq.id)?;
    Ok(seq)
}

/// Evaluates every matched scenario/prediction pair and writes the report.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let scenarios = files_by_id(&cfg.dataset_dir, SCENARIO_SUFFIX)?;
    let predictions = files_by_id(&cfg.predictions_dir, PREDICTION_SUFFIX)?;
    let mut stats = RunStats::default();
    let matched: Vec<(&String, &PathBuf, &PathBuf)> = scenarios
        .iter()
        .filter_map(|(id, s)| predictions.get(id).map(|p| (id, s, p)))
        .collect();
    stats.unmatched_scenarios = scenarios.len() - matched.len();
    stats.unmatched_predictions = predictions.keys().filter(|id| !scenarios.contains_key(*id)).count();
    if stats.unmatched_scenarios > 0 {
        warn!("{} scenario file(s) have no prediction file", stats.unmatched_scenarios);
    }
    if stats.unmatched_predictions > 0 {
        warn!("{} prediction file(s) have no scenario file", stats.unmatched_predictions);
    }
    info!("loading {} sequence(s)", matched.len());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let map_cfg = cfg.map_config();
    let loaded: Vec<Result<Sequence<f64>, Error>> =
        pool.install(|| matched.par_iter().map(|(_, s, p)| load_pair(s, p, cfg, &map_cfg)).collect());
    let mut dataset = Vec::with_capacity(loaded.len());
    for item in loaded {
        match item {
            Ok(seq) => dataset.push(seq),
            Err(e) if cfg.skip_invalid => {
                warn!("skipping invalid sequence: {e}");
                stats.skipped_invalid += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    if stats.skipped_invalid > 0 {
        warn!("{} invalid sequence(s) skipped", stats.skipped_invalid);
    }
    info!("evaluating {} sequence(s) on {} worker(s)", dataset.len(), cfg.workers);
    let (report, results) = evaluate_dataset(&dataset, &cfg.metric, cfg.workers)?;

    if let Some(path) = &cfg.per_sequence_dump {
        let mut text = String::new();
        for r in &results {
            text.push_str(&to_json_line(r)?);
        }
        fs::write(path, text).map_err(io_err(path))?;
    }
    let rendered = write_report(&report, cfg.format)?;
    match &cfg.output {
        Some(path) => fs::write(path, &rendered).map_err(io_err(path))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(rendered.as_bytes()).map_err(io_err(Path::new("<stdout>")))?;
            out.flush().map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    info!("done: {} sequence(s), {} filtered by class", report.sequence_count, report.filtered_count);
    Ok(RunOutcome { report, rendered, stats })
}

/// Where generated files go: `<out>/dataset` and `<out>/predictions`.
pub fn generated_dirs(out: &Path) -> (PathBuf, PathBuf) {
    (out.join("dataset"), out.join("predictions"))
}

/// Writes `count` random sequences, or the constructed golden scenarios
/// when `count` is `None`.
pub fn generate(out: &Path, count: Option<usize>, seed: u64, k: usize, workers: usize) -> Result<usize> {
    let (data_dir, pred_dir) = generated_dirs(out);
    for d in [&data_dir, &pred_dir] {
        fs::create_dir_all(d).map_err(io_err(d))?;
    }
    let write = |(s, p): (lmr_core::scenario_io::ScenarioFile, lmr_core::scenario_io::PredictionFile)| -> Result<()> {
        write_scenario(&data_dir, &s)?;
        write_predictions(&pred_dir, &p)?;
        Ok(())
    };
    match count {
        None => {
            let templates = golden::all();
            for t in &templates {
                write(generate_scenario(t, seed))?;
            }
            Ok(templates.len())
        }
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| (0..n as u64).into_par_iter().try_for_each(|i| write(random_sequence(seed, i, k))))?;
            Ok(n)
        }
    }
}
