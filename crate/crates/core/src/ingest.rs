//! Infection-record parsing, state exclusion, and the cumulative
//! vertex-set timeline.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read};

use chrono::{Days, NaiveDate};
use thiserror::Error;

use crate::geo::GeoPoint;

/// Required CSV columns, in order.
pub const RECORD_COLUMNS: [&str; 5] = [
    "region_id",
    "state",
    "latitude",
    "longitude",
    "first_report_date",
];

/// One region: identity, coordinates, and the date of its first report.
#[derive(Debug, Clone, PartialEq)]
pub struct InfectionRecord {
    pub region_id: String,
    pub state: String,
    pub location: GeoPoint,
    pub first_report: NaiveDate,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: field `{field}`: {problem}")]
    BadField {
        line: u64,
        field: &'static str,
        problem: String,
    },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("duplicate region_id `{region_id}` on lines {first_line} and {second_line}")]
    DuplicateRegion {
        region_id: String,
        first_line: u64,
        second_line: u64,
    },
    #[error("bad header: expected `region_id,state,latitude,longitude,first_report_date`")]
    BadHeader,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("window start {start} is after end {end}")]
    WindowOrder { start: NaiveDate, end: NaiveDate },
}

/// Parse the record CSV. The header is required, `#` lines are ignored,
/// and every reported error names the offending line.
pub fn parse_records<R: Read>(source: R) -> Result<Vec<InfectionRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);

    {
        let headers = reader.headers()?;
        if headers.len() != RECORD_COLUMNS.len()
            || headers.iter().zip(RECORD_COLUMNS).any(|(h, want)| h != want)
        {
            return Err(IngestError::BadHeader);
        }
    }

    let mut records = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != RECORD_COLUMNS.len() {
            return Err(IngestError::FieldCount {
                line,
                expected: RECORD_COLUMNS.len(),
                found: row.len(),
            });
        }

        let region_id = row[0].to_string();
        if region_id.is_empty() {
            return Err(IngestError::BadField {
                line,
                field: "region_id",
                problem: "must not be empty".into(),
            });
        }
        let state = row[1].to_string();
        if state.is_empty() {
            return Err(IngestError::BadField {
                line,
                field: "state",
                problem: "must not be empty".into(),
            });
        }

        let lat: f64 = row[2].parse().map_err(|_| IngestError::BadField {
            line,
            field: "latitude",
            problem: format!("`{}` is not a number", &row[2]),
        })?;
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(IngestError::BadField {
                line,
                field: "latitude",
                problem: format!("{lat} outside [-90, 90]"),
            });
        }
        let lon: f64 = row[3].parse().map_err(|_| IngestError::BadField {
            line,
            field: "longitude",
            problem: format!("`{}` is not a number", &row[3]),
        })?;
        if !lon.is_finite() {
            return Err(IngestError::BadField {
                line,
                field: "longitude",
                problem: "must be finite".into(),
            });
        }

        let first_report =
            NaiveDate::parse_from_str(&row[4], "%Y-%m-%d").map_err(|e| IngestError::BadField {
                line,
                field: "first_report_date",
                problem: format!("`{}` is not an ISO-8601 date: {e}", &row[4]),
            })?;

        if let Some(&first_line) = seen.get(&region_id) {
            return Err(IngestError::DuplicateRegion {
                region_id,
                first_line,
                second_line: line,
            });
        }
        seen.insert(region_id.clone(), line);

        records.push(InfectionRecord {
            region_id,
            state,
            location: GeoPoint::new(lat, lon).expect("validated above"),
            first_report,
        });
    }
    Ok(records)
}

/// Exclusion list: one state name per line, `#` comments and blank lines
/// ignored, surrounding whitespace trimmed.
pub fn parse_exclusion_list<R: Read>(source: R) -> std::io::Result<HashSet<String>> {
    let mut out = HashSet::new();
    for line in BufReader::new(source).lines() {
        let line = line?;
        let name = line.trim();
        if name.is_empty() || name.starts_with('#') {
            continue;
        }
        out.insert(name.to_string());
    }
    Ok(out)
}

/// Drop records whose state is in `excluded`, preserving order. A listed
/// state that matches nothing only warns, so one exclusion file can be
/// reused across datasets.
pub fn apply_exclusion(
    records: Vec<InfectionRecord>,
    excluded: &HashSet<String>,
) -> Vec<InfectionRecord> {
    let mut matched: HashSet<&str> = HashSet::new();
    let kept: Vec<InfectionRecord> = records
        .into_iter()
        .filter(|r| match excluded.get(&r.state) {
            Some(name) => {
                matched.insert(name.as_str());
                false
            }
            None => true,
        })
        .collect();
    for state in excluded {
        if !matched.contains(state.as_str()) {
            log::warn!("exclusion state `{state}` matched no records");
        }
    }
    kept
}

/// Daily cumulative vertex sets over a closed date window.
///
/// Records are ordered by (effective first report, region_id), where the
/// effective date clamps anything reported before the window onto day 0.
/// Day `k`'s vertex set is therefore a prefix of [`records`], which keeps
/// the monotonicity invariant structural: each day's set contains the
/// previous day's.
///
/// [`records`]: VertexTimeline::records
#[derive(Debug, Clone)]
pub struct VertexTimeline {
    start: NaiveDate,
    end: NaiveDate,
    records: Vec<InfectionRecord>,
    cumulative_counts: Vec<usize>,
}

impl VertexTimeline {
    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn num_days(&self) -> usize {
        self.cumulative_counts.len()
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start + Days::new(day as u64)
    }

    /// All in-window records in timeline order.
    pub fn records(&self) -> &[InfectionRecord] {
        &self.records
    }

    /// `counts()[k]` is the number of vertices present on day `k`.
    pub fn counts(&self) -> &[usize] {
        &self.cumulative_counts
    }

    pub fn vertices_on(&self, day: usize) -> &[InfectionRecord] {
        &self.records[..self.cumulative_counts[day]]
    }

    /// Vertices first appearing on `day`; day 0 counts everything already
    /// present at the window start.
    pub fn new_vertices_on(&self, day: usize) -> usize {
        if day == 0 {
            self.cumulative_counts[0]
        } else {
            self.cumulative_counts[day] - self.cumulative_counts[day - 1]
        }
    }
}

/// Build the daily cumulative timeline. Records reported before `start`
/// are carried into day 0 (they were already infected); records after
/// `end` are dropped.
pub fn build_timeline(
    records: Vec<InfectionRecord>,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<VertexTimeline, IngestError> {
    if start > end {
        return Err(IngestError::WindowOrder { start, end });
    }
    let mut kept: Vec<(NaiveDate, InfectionRecord)> = records
        .into_iter()
        .filter(|r| r.first_report <= end)
        .map(|r| (r.first_report.max(start), r))
        .collect();
    kept.sort_by(|a, b| (a.0, &a.1.region_id).cmp(&(b.0, &b.1.region_id)));

    let num_days = (end - start).num_days() as usize + 1;
    let mut counts = Vec::with_capacity(num_days);
    let mut p = 0;
    for day in 0..num_days {
        let date = start + Days::new(day as u64);
        while p < kept.len() && kept[p].0 <= date {
            p += 1;
        }
        counts.push(p);
    }

    Ok(VertexTimeline {
        start,
        end,
        records: kept.into_iter().map(|(_, r)| r).collect(),
        cumulative_counts: counts,
    })
}
