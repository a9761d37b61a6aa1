use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lmr_cli::{default_workers, generate, run, RunConfig};
use lmr_core::scenario_io::ReportFormat;
use lmr_core::{AssignmentConfig, MetricConfig};

#[derive(Parser)]
#[command(name = "lmr", version, about = "Lane Miss Rate evaluation for trajectory predictions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
            Format::Table => ReportFormat::Table,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate predictions against scenarios.
    Evaluate(EvaluateArgs),
    /// Write synthetic scenarios and predictions.
    Generate(GenerateArgs),
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// Directory of <id>.scenario.json files.
    #[arg(long)]
    dataset: PathBuf,
    /// Directory of <id>.prediction.json files.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 0.2)]
    c_scale: f64,
    #[arg(long, default_value_t = 0.7)]
    c_const: f64,
    #[arg(long, default_value_t = 5.0)]
    c_dist: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    c_orient: f64,
    #[arg(long, default_value_t = 0.5)]
    w: f64,
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
    /// Euclidean miss radius in meters.
    #[arg(long, default_value_t = 2.0)]
    mr_threshold: f64,
    /// Half width for lanes without boundaries.
    #[arg(long, default_value_t = 2.0)]
    half_width: f64,
    /// Focal agent classes to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "vehicle,motorcyclist,bus")]
    classes: Vec<String>,
    /// Defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Scan all lane rectangles instead of querying the R-tree.
    #[arg(long)]
    linear_scan: bool,
    /// Exclude sequences that fail validation instead of aborting.
    #[arg(long)]
    skip_invalid: bool,
    /// Write per-sequence labels as JSON lines.
    #[arg(long)]
    dump_per_sequence: Option<PathBuf>,
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Output directory; receives dataset/ and predictions/.
    #[arg(long)]
    out: PathBuf,
    /// Number of random sequences.
    #[arg(long, default_value_t = 100, conflicts_with = "golden")]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Modes per random sequence.
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Write the constructed scenarios with known labels instead.
    #[arg(long)]
    golden: bool,
    #[arg(long)]
    workers: Option<usize>,
}

fn evaluate(a: EvaluateArgs) -> lmr_cli::Result<()> {
    let defaults = MetricConfig::default();
    let metric = MetricConfig {
        c_scale: a.c_scale,
        c_const: a.c_const,
        euclidean_mr_threshold: a.mr_threshold,
        assignment: AssignmentConfig {
            c_dist: a.c_dist,
            c_orient: a.c_orient,
            w: a.w,
            margin: a.margin,
            ..defaults.assignment
        },
        agent_classes: a.classes.into_iter().collect(),
    };
    let cfg = RunConfig {
        dataset_dir: a.dataset,
        predictions_dir: a.predictions,
        k: a.k,
        metric,
        half_width: a.half_width,
        workers: a.workers.unwrap_or_else(default_workers),
        output: a.output,
        format: a.format.into(),
        linear_scan: a.linear_scan,
        skip_invalid: a.skip_invalid,
        per_sequence_dump: a.dump_per_sequence,
    };
    run(&cfg).map(|_| ())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evaluate(a) => evaluate(a),
        Command::Generate(g) => {
            let count = (!g.golden).then_some(g.count);
            generate(&g.out, count, g.seed, g.k, g.workers.unwrap_or_else(default_workers)).map(|n| {
                log::info!("wrote {n} sequence(s) to {}", g.out.display());
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
