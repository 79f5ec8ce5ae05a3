//! Command-line interface: argument schema and dispatch.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::growthfit::FitModel;
use crate::pipeline::{self, PipelineError, RunConfig};
use crate::synth::{SynthConfig, DEFAULT_LAT_RANGE, DEFAULT_LON_RANGE};

#[derive(Debug, Parser)]
#[command(
    name = "geonet",
    version,
    about = "Daily geodesic threshold networks over infection records: build, measure, fit, project"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("expected YYYY-MM-DD: {e}"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build per-day networks and write the metrics CSV and community JSON
    Analyze(AnalyzeArgs),
    /// Fit a growth model to the per-day vertex counts of a metrics CSV
    Fit(FitArgs),
    /// Evaluate a stored fit day by day through a target date
    Project(ProjectArgs),
    /// Generate a deterministic synthetic record file
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Input records CSV (region_id,state,latitude,longitude,first_report_date)
    #[arg(long)]
    pub input: PathBuf,
    /// Exclusion list: one state name per line
    #[arg(long)]
    pub exclude_states: Option<PathBuf>,
    /// First analysis day; earlier reports fold into day 0
    #[arg(long, value_parser = parse_date, default_value = "2020-03-01")]
    pub start: NaiveDate,
    /// Last analysis day (inclusive)
    #[arg(long, value_parser = parse_date, default_value = "2020-04-17")]
    pub end: NaiveDate,
    /// Recorded in the metrics file; `fit --before-lockdown` reads it back
    #[arg(long, value_parser = parse_date, default_value = "2020-03-25")]
    pub lockdown: NaiveDate,
    /// Metrics CSV output path
    #[arg(long)]
    pub out: PathBuf,
    /// Community JSON output path
    #[arg(long)]
    pub communities: PathBuf,
    /// Fixed threshold in km (what-if mode); default derives the minimal
    /// connecting threshold per day
    #[arg(long)]
    pub threshold_km: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub louvain_seed: u64,
    /// Keep the best modularity over this many seeded restarts
    #[arg(long, default_value_t = 1)]
    pub louvain_restarts: u32,
    /// Worker threads for per-day computation
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Average clustering over vertices of degree >= 2 only
    #[arg(long)]
    pub cc_exclude_low_degree: bool,
    /// Eigensolver residual tolerance
    #[arg(long, default_value_t = 1e-9)]
    pub eigen_tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Tanh,
    Cubic,
}

impl From<ModelArg> for FitModel {
    fn from(m: ModelArg) -> FitModel {
        match m {
            ModelArg::Tanh => FitModel::Tanh,
            ModelArg::Cubic => FitModel::Cubic,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Metrics CSV produced by `analyze`
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Fit only days strictly before the lockdown date recorded in the
    /// metrics file
    #[arg(long)]
    pub before_lockdown: bool,
    /// Fit JSON output path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Fit JSON produced by `fit`
    #[arg(long)]
    pub fit: PathBuf,
    /// Last projected day (inclusive)
    #[arg(long, value_parser = parse_date)]
    pub through: NaiveDate,
    /// Projection CSV output path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of regions
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_parser = parse_date)]
    pub start: NaiveDate,
    #[arg(long, value_parser = parse_date)]
    pub end: NaiveDate,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Records CSV output path
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAT_RANGE.0)]
    pub lat_min: f64,
    #[arg(long, default_value_t = DEFAULT_LAT_RANGE.1)]
    pub lat_max: f64,
    #[arg(long, default_value_t = DEFAULT_LON_RANGE.0)]
    pub lon_min: f64,
    #[arg(long, default_value_t = DEFAULT_LON_RANGE.1)]
    pub lon_max: f64,
}

pub fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Analyze(a) => {
            let cfg = RunConfig {
                input: a.input,
                exclude_states: a.exclude_states,
                start: a.start,
                end: a.end,
                lockdown: a.lockdown,
                out_metrics: a.out,
                out_communities: a.communities,
                threshold_km: a.threshold_km,
                louvain_seed: a.louvain_seed,
                louvain_restarts: a.louvain_restarts,
                eigen_tol: a.eigen_tol,
                jobs: a.jobs,
                cc_exclude_low_degree: a.cc_exclude_low_degree,
            };
            let summary = pipeline::run_analyze(&cfg)?;
            log::info!(
                "analyzed {} days, {} regions on the final day",
                summary.days,
                summary.final_vertex_count
            );
            Ok(())
        }
        Command::Fit(f) => {
            let doc = pipeline::run_fit(&f.metrics, f.model.into(), f.before_lockdown, &f.out)?;
            log::info!(
                "fit {}: rss {:.6e}, {} iterations",
                doc.model,
                doc.rss,
                doc.iterations
            );
            Ok(())
        }
        Command::Project(p) => pipeline::run_project(&p.fit, p.through, &p.out),
        Command::Synth(s) => {
            let cfg = SynthConfig {
                regions: s.n,
                start: s.start,
                end: s.end,
                seed: s.seed,
                lat_range: (s.lat_min, s.lat_max),
                lon_range: (s.lon_min, s.lon_max),
            };
            pipeline::run_synth(&cfg, &s.out)
        }
    }
}
