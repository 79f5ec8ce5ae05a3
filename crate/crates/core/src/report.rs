//! Output formats: the per-day metrics CSV, the community JSON, the fit
//! JSON, and the projection CSV, plus the parsing and schema validation
//! that make round-trips testable.

use std::io::{self, BufRead, BufReader, Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::growthfit::{extrapolate, FitModel, FitResult};
use crate::metrics::MetricsRow;

pub const METRICS_COLUMNS: [&str; 15] = [
    "date",
    "n",
    "new_vertices",
    "d_km",
    "max_degree",
    "avg_degree",
    "avg_clustering",
    "triangles",
    "diameter",
    "avg_path_length",
    "spectral_radius",
    "algebraic_connectivity",
    "modularity",
    "communities",
    "largest_community",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {problem}")]
    BadRow { line: usize, problem: String },
    #[error("bad metrics header (expected the fixed 15-column layout)")]
    BadHeader,
    #[error("no data rows")]
    Empty,
    #[error("invalid fit document: {0}")]
    BadFit(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// Format a real with 9 significant digits, shortest form, `.` separator,
/// no locale dependence (the `%.9g` convention).
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 9);

    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if (-4..9).contains(&exp) {
        if exp >= 0 {
            let point = (exp + 1) as usize;
            out.push_str(&digits[..point]);
            let frac = digits[point..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        } else {
            out.push_str("0.");
            for _ in 0..(-exp - 1) {
                out.push('0');
            }
            out.push_str(digits.trim_end_matches('0'));
        }
    } else {
        let frac = digits[1..].trim_end_matches('0');
        out.push_str(&digits[..1]);
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
        out.push('e');
        out.push_str(&exp.to_string());
    }
    out
}

fn format_opt_sig(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

/// Metadata comments carried at the top of a metrics CSV; `fit
/// --before-lockdown` reads the lockdown date back from here.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsMeta {
    pub lockdown: Option<NaiveDate>,
    pub threshold_km: Option<f64>,
    pub cc_exclude_low_degree: bool,
}

pub fn metrics_row_to_csv(r: &MetricsRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.date.format("%Y-%m-%d"),
        r.n,
        r.new_vertices,
        format_sig(r.d_km),
        r.max_degree,
        format_sig(r.avg_degree),
        format_sig(r.avg_clustering),
        r.triangles,
        r.diameter.map(|d| d.to_string()).unwrap_or_default(),
        format_opt_sig(r.avg_path_length),
        format_sig(r.spectral_radius),
        format_opt_sig(r.algebraic_connectivity),
        format_opt_sig(r.modularity),
        r.communities,
        r.largest_community,
    )
}

pub fn write_metrics_csv<W: Write>(
    w: &mut W,
    meta: &MetricsMeta,
    rows: &[MetricsRow],
) -> io::Result<()> {
    writeln!(w, "# geonet metrics v1")?;
    if let Some(d) = meta.lockdown {
        writeln!(w, "# lockdown: {}", d.format("%Y-%m-%d"))?;
    }
    if let Some(t) = meta.threshold_km {
        writeln!(w, "# threshold-km: {}", format_sig(t))?;
    }
    if meta.cc_exclude_low_degree {
        writeln!(w, "# cc-average: degree>=2")?;
    }
    writeln!(
        w,
        "# conventions: n < 2 or edgeless days leave algebraic_connectivity/modularity empty;"
    )?;
    writeln!(
        w,
        "#   disconnected days leave diameter/avg_path_length empty and report algebraic_connectivity 0;"
    )?;
    writeln!(w, "#   reals carry 9 significant digits")?;
    writeln!(w, "{}", METRICS_COLUMNS.join(","))?;
    for row in rows {
        writeln!(w, "{}", metrics_row_to_csv(row))?;
    }
    Ok(())
}

fn bad_row(line: usize, problem: impl Into<String>) -> ReportError {
    ReportError::BadRow {
        line,
        problem: problem.into(),
    }
}

fn parse_date_field(s: &str, line: usize, what: &str) -> Result<NaiveDate, ReportError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| bad_row(line, format!("{what} `{s}`: {e}")))
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, ReportError> {
    s.parse()
        .map_err(|_| bad_row(line, format!("{what} `{s}` is not valid")))
}

fn parse_opt<T: std::str::FromStr>(
    s: &str,
    line: usize,
    what: &str,
) -> Result<Option<T>, ReportError> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_num(s, line, what).map(Some)
    }
}

pub fn parse_metrics_row(line_text: &str, line: usize) -> Result<MetricsRow, ReportError> {
    let fields: Vec<&str> = line_text.split(',').collect();
    if fields.len() != METRICS_COLUMNS.len() {
        return Err(bad_row(
            line,
            format!("expected {} fields, found {}", METRICS_COLUMNS.len(), fields.len()),
        ));
    }
    Ok(MetricsRow {
        date: parse_date_field(fields[0], line, "date")?,
        n: parse_num(fields[1], line, "n")?,
        new_vertices: parse_num(fields[2], line, "new_vertices")?,
        d_km: parse_num(fields[3], line, "d_km")?,
        max_degree: parse_num(fields[4], line, "max_degree")?,
        avg_degree: parse_num(fields[5], line, "avg_degree")?,
        avg_clustering: parse_num(fields[6], line, "avg_clustering")?,
        triangles: parse_num(fields[7], line, "triangles")?,
        diameter: parse_opt(fields[8], line, "diameter")?,
        avg_path_length: parse_opt(fields[9], line, "avg_path_length")?,
        spectral_radius: parse_num(fields[10], line, "spectral_radius")?,
        algebraic_connectivity: parse_opt(fields[11], line, "algebraic_connectivity")?,
        modularity: parse_opt(fields[12], line, "modularity")?,
        communities: parse_num(fields[13], line, "communities")?,
        largest_community: parse_num(fields[14], line, "largest_community")?,
    })
}

/// Read a metrics CSV back: metadata comments, exact header, data rows in
/// strictly increasing date order.
pub fn read_metrics_csv<R: Read>(r: R) -> Result<(MetricsMeta, Vec<MetricsRow>), ReportError> {
    let mut meta = MetricsMeta::default();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim_end();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("lockdown:") {
                meta.lockdown = Some(parse_date_field(v.trim(), line_no, "lockdown")?);
            } else if let Some(v) = comment.strip_prefix("threshold-km:") {
                meta.threshold_km = Some(parse_num(v.trim(), line_no, "threshold-km")?);
            } else if comment == "cc-average: degree>=2" {
                meta.cc_exclude_low_degree = true;
            }
            continue;
        }
        if !saw_header {
            if text != METRICS_COLUMNS.join(",") {
                return Err(ReportError::BadHeader);
            }
            saw_header = true;
            continue;
        }
        let row = parse_metrics_row(text, line_no)?;
        if let Some(prev) = rows.last() {
            let prev: &MetricsRow = prev;
            if row.date <= prev.date {
                return Err(bad_row(line_no, "dates must be strictly increasing"));
            }
        }
        rows.push(row);
    }
    if !saw_header {
        return Err(ReportError::BadHeader);
    }
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok((meta, rows))
}

/// Schema validator: parse plus the row-level invariants. Returns the
/// number of data rows.
pub fn validate_metrics_csv<R: Read>(r: R) -> Result<usize, ReportError> {
    let (_, rows) = read_metrics_csv(r)?;
    for (i, row) in rows.iter().enumerate() {
        let line = i + 1; // data-row ordinal, not file line
        let fail = |problem: String| bad_row(line, problem);
        if !(0.0..=1.0).contains(&row.avg_clustering) {
            return Err(fail(format!("avg_clustering {} outside [0, 1]", row.avg_clustering)));
        }
        if row.n >= 1 && row.max_degree > row.n - 1 {
            return Err(fail(format!("max_degree {} exceeds n-1", row.max_degree)));
        }
        if row.avg_degree > row.max_degree as f64 + 1e-9 {
            return Err(fail("avg_degree exceeds max_degree".into()));
        }
        if row.d_km < 0.0 || row.spectral_radius < -1e-12 {
            return Err(fail("negative distance or spectral radius".into()));
        }
        if let Some(l) = row.algebraic_connectivity {
            if l < 0.0 {
                return Err(fail("negative algebraic connectivity".into()));
            }
        }
        if let Some(q) = row.modularity {
            if !(-0.5..=1.0).contains(&q) {
                return Err(fail(format!("modularity {q} outside [-0.5, 1]")));
            }
        }
        if row.communities > row.n || row.largest_community > row.n {
            return Err(fail("community counts exceed n".into()));
        }
        if row.n >= 2 {
            if let Some(d) = row.diameter {
                if d < 1 {
                    return Err(fail("diameter below 1 on a connected day".into()));
                }
            }
            if let (Some(apl), Some(d)) = (row.avg_path_length, row.diameter) {
                if apl > d as f64 + 1e-9 || apl < 1.0 - 1e-9 {
                    return Err(fail("avg_path_length outside [1, diameter]".into()));
                }
            }
        }
    }
    Ok(rows.len())
}

/// One day's communities and modularity for the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityDay {
    pub date: String,
    pub communities: Vec<Vec<String>>,
    pub modularity: Option<f64>,
}

pub fn write_communities_json<W: Write>(w: &mut W, days: &[CommunityDay]) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut *w, days)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_communities_json<R: Read>(r: R) -> Result<Vec<CommunityDay>, ReportError> {
    Ok(serde_json::from_reader(r)?)
}

/// Serialized fit: `{model, params, rss, converged, iterations, origin_date}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub model: String,
    pub params: Vec<f64>,
    pub rss: f64,
    pub converged: bool,
    pub iterations: u32,
    pub origin_date: String,
}

impl FitDocument {
    pub fn from_fit(fit: &FitResult, origin: NaiveDate) -> FitDocument {
        FitDocument {
            model: fit.model.as_str().to_string(),
            params: fit.params.clone(),
            rss: fit.rss,
            converged: fit.converged,
            iterations: fit.iterations,
            origin_date: origin.format("%Y-%m-%d").to_string(),
        }
    }

    pub fn origin(&self) -> Result<NaiveDate, ReportError> {
        NaiveDate::parse_from_str(&self.origin_date, "%Y-%m-%d")
            .map_err(|e| ReportError::BadFit(format!("origin_date `{}`: {e}", self.origin_date)))
    }

    pub fn fit_result(&self) -> Result<FitResult, ReportError> {
        let model = FitModel::parse(&self.model)
            .ok_or_else(|| ReportError::BadFit(format!("unknown model `{}`", self.model)))?;
        if self.params.len() != 4 {
            return Err(ReportError::BadFit(format!(
                "expected 4 parameters, found {}",
                self.params.len()
            )));
        }
        Ok(FitResult {
            model,
            params: self.params.clone(),
            rss: self.rss,
            converged: self.converged,
            iterations: self.iterations,
        })
    }
}

pub fn write_fit_json<W: Write>(w: &mut W, doc: &FitDocument) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut *w, doc)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_fit_json<R: Read>(r: R) -> Result<FitDocument, ReportError> {
    Ok(serde_json::from_reader(r)?)
}

/// One row per day from the fit origin through `through` (inclusive),
/// with x = 1 on the origin date.
pub fn write_projection_csv<W: Write>(
    w: &mut W,
    doc: &FitDocument,
    through: NaiveDate,
) -> Result<(), ReportError> {
    let origin = doc.origin()?;
    let fit = doc.fit_result()?;
    let days = (through - origin).num_days();
    debug_assert!(days >= 0, "validated by the caller");
    let xs: Vec<f64> = (0..=days).map(|d| (d + 1) as f64).collect();
    let values = extrapolate(&fit, &xs).map_err(|e| ReportError::BadFit(e.to_string()))?;
    writeln!(w, "# geonet projection v1: model {} from {}", doc.model, doc.origin_date)?;
    writeln!(w, "date,x,predicted")?;
    for (d, value) in values.iter().enumerate() {
        let date = origin + chrono::Days::new(d as u64);
        writeln!(w, "{},{},{}", date.format("%Y-%m-%d"), d + 1, format_sig(*value))?;
    }
    Ok(())
}
