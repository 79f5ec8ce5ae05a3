//! End-to-end orchestration behind the CLI subcommands: analyze, fit,
//! project, synth.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use thiserror::Error;

use crate::community::{self, CommunityError};
use crate::geo::GeoPoint;
use crate::growthfit::{self, FitError, FitModel, GrowthSeries};
use crate::ingest::{self, IngestError, VertexTimeline};
use crate::metrics::{self, MetricsRow};
use crate::netbuild::{DistanceMatrix, NetError, Snapshot};
use crate::report::{self, CommunityDay, FitDocument, MetricsMeta, ReportError};
use crate::spectral::{self, SpectralError};
use crate::synth::{self, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Community(#[from] CommunityError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Config(String),
}

impl PipelineError {
    /// 0 success, 2 input validation, 3 numerical non-convergence, 4 I/O;
    /// 1 is reserved for internal invariant failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } => EXIT_IO,
            PipelineError::Report(ReportError::Io(_)) => EXIT_IO,
            PipelineError::Ingest(_)
            | PipelineError::Net(_)
            | PipelineError::Metrics(_)
            | PipelineError::Config(_)
            | PipelineError::Report(_) => EXIT_INVALID_INPUT,
            PipelineError::Spectral(SpectralError::NoConvergence { .. })
            | PipelineError::Spectral(SpectralError::Factorization) => EXIT_NO_CONVERGENCE,
            PipelineError::Spectral(SpectralError::ComponentMismatch { .. }) => EXIT_INTERNAL,
            PipelineError::Spectral(_) => EXIT_INVALID_INPUT,
            PipelineError::Community(CommunityError::Inconsistent { .. }) => EXIT_INTERNAL,
            PipelineError::Community(_) => EXIT_INVALID_INPUT,
            PipelineError::Fit(FitError::NoConvergence(_))
            | PipelineError::Fit(FitError::IllConditioned(_)) => EXIT_NO_CONVERGENCE,
            PipelineError::Fit(_) => EXIT_INVALID_INPUT,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// All knobs of the analyze subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub exclude_states: Option<PathBuf>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub lockdown: NaiveDate,
    pub out_metrics: PathBuf,
    pub out_communities: PathBuf,
    pub threshold_km: Option<f64>,
    pub louvain_seed: u64,
    pub louvain_restarts: u32,
    pub eigen_tol: f64,
    pub jobs: usize,
    pub cc_exclude_low_degree: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.start > self.lockdown || self.lockdown > self.end {
            return Err(PipelineError::Config(format!(
                "expected start <= lockdown <= end, got {} / {} / {}",
                self.start, self.lockdown, self.end
            )));
        }
        if self.eigen_tol.is_nan() || self.eigen_tol <= 0.0 {
            return Err(PipelineError::Config(format!(
                "eigen tolerance must be positive, got {}",
                self.eigen_tol
            )));
        }
        if let Some(t) = self.threshold_km {
            if !t.is_finite() || t < 0.0 {
                return Err(PipelineError::Config(format!(
                    "threshold must be a non-negative number, got {t}"
                )));
            }
        }
        if self.louvain_restarts < 1 {
            return Err(PipelineError::Config("louvain restarts must be >= 1".into()));
        }
        if self.jobs < 1 {
            return Err(PipelineError::Config("jobs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-day computation knobs, the pure subset of [`RunConfig`].
#[derive(Debug, Clone, Copy)]
pub struct DayOptions {
    pub threshold_km: Option<f64>,
    pub louvain_seed: u64,
    pub louvain_restarts: u32,
    pub eigen_tol: f64,
    pub cc_exclude_low_degree: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeSummary {
    pub days: usize,
    pub final_vertex_count: usize,
}

/// Compute every day's metrics row and community listing. Days are
/// independent, so with `jobs > 1` they are distributed over a thread
/// pool; output order is by date either way.
pub fn analyze_timeline(
    timeline: &VertexTimeline,
    opts: &DayOptions,
    jobs: usize,
) -> Result<(Vec<MetricsRow>, Vec<CommunityDay>), PipelineError> {
    let points: Vec<GeoPoint> = timeline.records().iter().map(|r| r.location).collect();
    let master = DistanceMatrix::from_points(&points);
    let days: Vec<usize> = (0..timeline.num_days()).collect();

    let run_day = |day: &usize| compute_day(timeline, &master, *day, opts);
    let pairs: Vec<(MetricsRow, CommunityDay)> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        pool.install(|| days.par_iter().map(run_day).collect::<Result<Vec<_>, _>>())?
    } else {
        days.iter().map(run_day).collect::<Result<Vec<_>, _>>()?
    };
    Ok(pairs.into_iter().unzip())
}

fn compute_day(
    timeline: &VertexTimeline,
    master: &DistanceMatrix,
    day: usize,
    opts: &DayOptions,
) -> Result<(MetricsRow, CommunityDay), PipelineError> {
    let date = timeline.date(day);
    let date_str = date.format("%Y-%m-%d").to_string();
    let records = timeline.vertices_on(day);
    let n = records.len();
    let new_vertices = timeline.new_vertices_on(day);

    if n == 0 {
        let row = MetricsRow {
            date,
            n: 0,
            new_vertices: 0,
            d_km: 0.0,
            max_degree: 0,
            avg_degree: 0.0,
            avg_clustering: 0.0,
            triangles: 0,
            diameter: None,
            avg_path_length: None,
            spectral_radius: 0.0,
            algebraic_connectivity: None,
            modularity: None,
            communities: 0,
            largest_community: 0,
        };
        let day = CommunityDay {
            date: date_str,
            communities: Vec::new(),
            modularity: None,
        };
        return Ok((row, day));
    }

    let ids: Vec<String> = records.iter().map(|r| r.region_id.clone()).collect();
    let d = master.leading(n);
    let snapshot = Snapshot::build(date, ids, &d, opts.threshold_km)?;

    if n == 1 {
        let row = MetricsRow {
            date,
            n: 1,
            new_vertices,
            d_km: snapshot.connectivity_param(),
            max_degree: 0,
            avg_degree: 0.0,
            avg_clustering: 0.0,
            triangles: 0,
            diameter: Some(0),
            avg_path_length: Some(0.0),
            spectral_radius: 0.0,
            algebraic_connectivity: None,
            modularity: None,
            communities: 1,
            largest_community: 1,
        };
        let day = CommunityDay {
            date: date_str,
            communities: vec![vec![snapshot.region_ids()[0].clone()]],
            modularity: None,
        };
        return Ok((row, day));
    }

    let (max_degree, avg_degree) = metrics::degree_stats(&snapshot);
    let (_, avg_clustering) = metrics::clustering(&snapshot, opts.cc_exclude_low_degree);
    let triangles = metrics::triangle_count(&snapshot);
    let (diameter, avg_path_length) = if snapshot.is_connected() {
        let (d, apl) = metrics::path_metrics(&snapshot)?;
        (Some(d), Some(apl))
    } else {
        (None, None)
    };
    let spectral_radius = spectral::spectral_radius(&snapshot, opts.eigen_tol)?.value;
    let lambda = spectral::algebraic_connectivity(&snapshot, opts.eigen_tol)?;
    // disconnected days report the exact value 0 rather than iteration noise
    let algebraic_connectivity = if snapshot.is_connected() {
        Some(lambda.value)
    } else {
        Some(0.0)
    };

    let (modularity, communities, largest_community, groups) = if snapshot.edge_count() == 0 {
        let groups: Vec<Vec<String>> = snapshot
            .region_ids()
            .iter()
            .map(|id| vec![id.clone()])
            .collect();
        (None, n, 1, groups)
    } else {
        let (partition, stats) =
            community::louvain_best_of(&snapshot, opts.louvain_seed, opts.louvain_restarts)?;
        let groups: Vec<Vec<String>> = partition
            .members()
            .into_iter()
            .map(|members| {
                members
                    .into_iter()
                    .map(|v| snapshot.region_ids()[v].clone())
                    .collect()
            })
            .collect();
        (
            stats.modularity,
            stats.community_count,
            stats.largest_size,
            groups,
        )
    };

    let row = MetricsRow {
        date,
        n,
        new_vertices,
        d_km: snapshot.connectivity_param(),
        max_degree,
        avg_degree,
        avg_clustering,
        triangles,
        diameter,
        avg_path_length,
        spectral_radius,
        algebraic_connectivity,
        modularity,
        communities,
        largest_community,
    };
    let day = CommunityDay {
        date: date_str,
        communities: groups,
        modularity,
    };
    Ok((row, day))
}

/// `analyze`: ingest, exclude, build the timeline, measure every day,
/// write the metrics CSV and community JSON.
pub fn run_analyze(cfg: &RunConfig) -> Result<AnalyzeSummary, PipelineError> {
    cfg.validate()?;

    let input = fs::File::open(&cfg.input).map_err(io_err(&cfg.input))?;
    let mut records = ingest::parse_records(input)?;
    if let Some(path) = &cfg.exclude_states {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let excluded = ingest::parse_exclusion_list(file).map_err(io_err(path))?;
        records = ingest::apply_exclusion(records, &excluded);
    }
    let timeline = ingest::build_timeline(records, cfg.start, cfg.end)?;

    let opts = DayOptions {
        threshold_km: cfg.threshold_km,
        louvain_seed: cfg.louvain_seed,
        louvain_restarts: cfg.louvain_restarts,
        eigen_tol: cfg.eigen_tol,
        cc_exclude_low_degree: cfg.cc_exclude_low_degree,
    };
    let (rows, community_days) = analyze_timeline(&timeline, &opts, cfg.jobs)?;

    let meta = MetricsMeta {
        lockdown: Some(cfg.lockdown),
        threshold_km: cfg.threshold_km,
        cc_exclude_low_degree: cfg.cc_exclude_low_degree,
    };
    let out = fs::File::create(&cfg.out_metrics).map_err(io_err(&cfg.out_metrics))?;
    let mut w = BufWriter::new(out);
    report::write_metrics_csv(&mut w, &meta, &rows).map_err(io_err(&cfg.out_metrics))?;
    w.flush().map_err(io_err(&cfg.out_metrics))?;

    let out = fs::File::create(&cfg.out_communities).map_err(io_err(&cfg.out_communities))?;
    let mut w = BufWriter::new(out);
    report::write_communities_json(&mut w, &community_days)?;
    w.flush().map_err(io_err(&cfg.out_communities))?;

    Ok(AnalyzeSummary {
        days: rows.len(),
        final_vertex_count: rows.last().map_or(0, |r| r.n),
    })
}

/// `fit`: read the metrics CSV, fit the requested model to the
/// (day index, n) series, write the fit JSON. With `before_lockdown` the
/// series is trimmed to dates strictly before the lockdown recorded in
/// the metrics metadata.
pub fn run_fit(
    metrics_path: &Path,
    model: FitModel,
    before_lockdown: bool,
    out: &Path,
) -> Result<FitDocument, PipelineError> {
    let file = fs::File::open(metrics_path).map_err(io_err(metrics_path))?;
    let (meta, rows) = report::read_metrics_csv(file)?;
    let origin = rows[0].date;

    let cutoff = if before_lockdown {
        Some(meta.lockdown.ok_or_else(|| {
            PipelineError::Config(
                "--before-lockdown needs a `# lockdown:` line in the metrics file (analyze writes it)"
                    .into(),
            )
        })?)
    } else {
        None
    };

    let mut x = Vec::new();
    let mut y = Vec::new();
    for row in &rows {
        if let Some(cutoff) = cutoff {
            if row.date >= cutoff {
                continue;
            }
        }
        x.push((row.date - origin).num_days() + 1);
        y.push(row.n as f64);
    }
    if x.len() < model.min_points() {
        return Err(PipelineError::Fit(FitError::TooFewPoints {
            model: model.as_str(),
            needed: model.min_points(),
            got: x.len(),
        }));
    }
    let series = GrowthSeries::new(x, y)?;
    let fit = match model {
        FitModel::Cubic => growthfit::fit_cubic(&series)?,
        FitModel::Tanh => growthfit::fit_tanh(&series, None)?,
    };

    let doc = FitDocument::from_fit(&fit, origin);
    let file = fs::File::create(out).map_err(io_err(out))?;
    let mut w = BufWriter::new(file);
    report::write_fit_json(&mut w, &doc)?;
    w.flush().map_err(io_err(out))?;
    Ok(doc)
}

/// `project`: evaluate a stored fit day by day through `through`.
pub fn run_project(fit_path: &Path, through: NaiveDate, out: &Path) -> Result<(), PipelineError> {
    let file = fs::File::open(fit_path).map_err(io_err(fit_path))?;
    let doc = report::read_fit_json(file)?;
    let origin = doc.origin()?;
    doc.fit_result()?; // validate model and parameter count up front
    if through < origin {
        return Err(PipelineError::Config(format!(
            "--through {through} is before the fit origin {origin}"
        )));
    }
    let file = fs::File::create(out).map_err(io_err(out))?;
    let mut w = BufWriter::new(file);
    report::write_projection_csv(&mut w, &doc, through)?;
    w.flush().map_err(io_err(out))?;
    Ok(())
}

/// `synth`: validate the config and write a deterministic record file.
pub fn run_synth(cfg: &SynthConfig, out: &Path) -> Result<(), PipelineError> {
    if cfg.regions < 1 {
        return Err(PipelineError::Config("need at least 1 region".into()));
    }
    if cfg.start > cfg.end {
        return Err(PipelineError::Config(format!(
            "start {} is after end {}",
            cfg.start, cfg.end
        )));
    }
    let (lat_lo, lat_hi) = cfg.lat_range;
    let (lon_lo, lon_hi) = cfg.lon_range;
    if !(lat_lo <= lat_hi && (-90.0..=90.0).contains(&lat_lo) && (-90.0..=90.0).contains(&lat_hi))
    {
        return Err(PipelineError::Config(format!(
            "bad latitude range [{lat_lo}, {lat_hi}]"
        )));
    }
    if !lon_lo.is_finite() || !lon_hi.is_finite() || lon_lo > lon_hi {
        return Err(PipelineError::Config(format!(
            "bad longitude range [{lon_lo}, {lon_hi}]"
        )));
    }

    let records = synth::generate(cfg);
    let file = fs::File::create(out).map_err(io_err(out))?;
    let mut w = BufWriter::new(file);
    synth::write_records_csv(&mut w, &records).map_err(io_err(out))?;
    w.flush().map_err(io_err(out))?;
    Ok(())
}
