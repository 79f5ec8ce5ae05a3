//! Seeded synthetic record generator for self-tests and demos.

use std::io::{self, Write};

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geo::GeoPoint;
use crate::ingest::{InfectionRecord, RECORD_COLUMNS};

/// Defaults cover the bounding box of the Indian mainland.
pub const DEFAULT_LAT_RANGE: (f64, f64) = (8.0, 34.0);
pub const DEFAULT_LON_RANGE: (f64, f64) = (68.0, 92.0);

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub regions: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub seed: u64,
    pub lat_range: (f64, f64),
    pub lon_range: (f64, f64),
}

impl SynthConfig {
    pub fn new(regions: usize, start: NaiveDate, end: NaiveDate, seed: u64) -> SynthConfig {
        SynthConfig {
            regions,
            start,
            end,
            seed,
            lat_range: DEFAULT_LAT_RANGE,
            lon_range: DEFAULT_LON_RANGE,
        }
    }
}

/// Deterministic records: coordinates uniform in the bounding box,
/// first-report dates placed by inverse-logistic quantiles (plus ±1 day
/// of jitter) so the cumulative daily count traces a logistic-like curve
/// across the window. Identical seeds give identical records.
///
/// Callers validate the config; see `pipeline::run_synth`.
pub fn generate(cfg: &SynthConfig) -> Vec<InfectionRecord> {
    assert!(cfg.regions >= 1, "regions must be >= 1");
    assert!(cfg.start <= cfg.end, "start must not exceed end");

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.regions;
    let span = (cfg.end - cfg.start).num_days();
    let mid = span as f64 / 2.0;
    let scale = span as f64 / 12.0;
    let id_width = n.to_string().len().max(4);

    (0..n)
        .map(|k| {
            let lat = rng.random_range(cfg.lat_range.0..=cfg.lat_range.1);
            let lon = rng.random_range(cfg.lon_range.0..=cfg.lon_range.1);
            let state: u32 = rng.random_range(1..=8);
            let jitter: i64 = rng.random_range(-1..=1);

            let p = (k as f64 + 0.5) / n as f64;
            let day = (mid + scale * (p / (1.0 - p)).ln()).round() as i64 + jitter;
            let day = day.clamp(0, span);

            InfectionRecord {
                region_id: format!("R{:0id_width$}", k + 1),
                state: format!("S{state:02}"),
                location: GeoPoint::new(lat, lon).expect("box within valid ranges"),
                first_report: cfg.start + Days::new(day as u64),
            }
        })
        .collect()
}

/// Write records in the exact ingest CSV layout.
pub fn write_records_csv<W: Write>(w: &mut W, records: &[InfectionRecord]) -> io::Result<()> {
    writeln!(w, "{}", RECORD_COLUMNS.join(","))?;
    for r in records {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{}",
            r.region_id,
            r.state,
            r.location.lat(),
            r.location.lon(),
            r.first_report.format("%Y-%m-%d")
        )?;
    }
    Ok(())
}
