//! Reproducible rail-like demo data.
//!
//! Weekly carload counts for several commodity groups (trend, annual
//! seasonality, autocorrelated noise, a recession-shaped dip in 2008-2010
//! and component-specific 2020 shocks) plus two monthly, seasonally
//! adjusted indicators shaped like durable-goods consumption and industrial
//! production.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::series::{Period, TimeSeries};

pub const DEFAULT_SEED: u64 = 20_200_401;
pub const RAIL_FILE: &str = "rail_weekly.csv";
pub const INDICATOR_FILE: &str = "indicators_monthly.csv";

const FIRST_YEAR: i32 = 2005;
const LAST_YEAR: i32 = 2020;

/// The injected 2020 multipliers for the intermodal component: a 20% drop
/// in April through June, nothing elsewhere.
pub const INTERMODAL_SHOCK_MONTHS: [u32; 3] = [4, 5, 6];
pub const INTERMODAL_SHOCK_FACTOR: f64 = 0.8;

struct Component {
    name: &'static str,
    level: f64,
    /// Log growth per year.
    growth: f64,
    /// Amplitude and phase (months) of the annual cycle, log scale.
    amplitude: f64,
    phase: f64,
    /// Year-end dip, log scale.
    december: f64,
    monthly_sd: f64,
    weekly_sd: f64,
    recession_depth: f64,
    covid: [f64; 12],
}

const COMPONENTS: [Component; 7] = [
    Component {
        name: "intermodal",
        level: 250_000.0,
        growth: 0.012,
        amplitude: 0.05,
        phase: 7.5,
        december: 0.06,
        monthly_sd: 0.006,
        weekly_sd: 0.008,
        recession_depth: 0.16,
        covid: [1.0, 1.0, 1.0, 0.8, 0.8, 0.8, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    },
    Component {
        name: "coal",
        level: 130_000.0,
        growth: -0.035,
        amplitude: 0.06,
        phase: 1.0,
        december: 0.02,
        monthly_sd: 0.02,
        weekly_sd: 0.02,
        recession_depth: 0.14,
        covid: [1.0, 1.0, 0.95, 0.75, 0.72, 0.78, 0.85, 0.88, 0.9, 0.9, 0.92, 0.92],
    },
    Component {
        name: "grain",
        level: 21_000.0,
        growth: 0.004,
        amplitude: 0.12,
        phase: 10.0,
        december: 0.03,
        monthly_sd: 0.035,
        weekly_sd: 0.03,
        recession_depth: 0.05,
        covid: [1.0, 1.0, 1.0, 0.97, 0.98, 1.0, 1.02, 1.05, 1.08, 1.1, 1.12, 1.1],
    },
    Component {
        name: "chemicals",
        level: 30_000.0,
        growth: 0.015,
        amplitude: 0.025,
        phase: 4.0,
        december: 0.05,
        monthly_sd: 0.012,
        weekly_sd: 0.015,
        recession_depth: 0.18,
        covid: [1.0, 1.0, 1.0, 0.9, 0.88, 0.93, 0.96, 0.97, 0.98, 0.99, 1.0, 1.0],
    },
    Component {
        name: "motor_vehicles",
        level: 16_000.0,
        growth: 0.01,
        amplitude: 0.06,
        phase: 4.5,
        december: 0.12,
        monthly_sd: 0.025,
        weekly_sd: 0.03,
        recession_depth: 0.4,
        covid: [1.0, 1.0, 0.9, 0.35, 0.45, 0.8, 1.0, 1.05, 1.04, 1.03, 1.02, 1.01],
    },
    Component {
        name: "metals",
        level: 9_000.0,
        growth: -0.005,
        amplitude: 0.03,
        phase: 5.0,
        december: 0.06,
        monthly_sd: 0.02,
        weekly_sd: 0.025,
        recession_depth: 0.45,
        covid: [1.0, 1.0, 0.95, 0.7, 0.65, 0.7, 0.72, 0.75, 0.78, 0.8, 0.82, 0.84],
    },
    Component {
        name: "petroleum",
        level: 11_000.0,
        growth: 0.03,
        amplitude: 0.03,
        phase: 0.5,
        december: 0.03,
        monthly_sd: 0.02,
        weekly_sd: 0.02,
        recession_depth: 0.1,
        covid: [1.0, 1.0, 1.0, 0.92, 0.9, 0.88, 0.86, 0.85, 0.84, 0.82, 0.8, 0.8],
    },
];

pub fn component_names() -> Vec<&'static str> {
    COMPONENTS.iter().map(|c| c.name).collect()
}

fn months_since_start(year: i32, month: u32) -> usize {
    ((year - FIRST_YEAR) * 12 + month as i32 - 1) as usize
}

/// Recession profile in [0, 1]: rises from September 2008 to a trough in
/// May 2009, fades out by December 2010.
fn recession(year: i32, month: u32) -> f64 {
    let t = months_since_start(year, month) as f64;
    let start = months_since_start(2008, 9) as f64;
    let trough = months_since_start(2009, 5) as f64;
    let end = months_since_start(2010, 12) as f64;
    if t <= start || t >= end {
        0.0
    } else if t <= trough {
        (t - start) / (trough - start)
    } else {
        (end - t) / (end - trough)
    }
}

fn ar1_path(rng: &mut ChaCha8Rng, n: usize, phi: f64, sd: f64) -> Vec<f64> {
    let innov = sd * (1.0 - phi * phi).sqrt();
    let first: f64 = StandardNormal.sample(rng);
    let mut u = sd * first;
    (0..n)
        .map(|i| {
            if i > 0 {
                let z: f64 = StandardNormal.sample(rng);
                u = phi * u + innov * z;
            }
            u
        })
        .collect()
}

fn saturdays() -> Vec<NaiveDate> {
    let first = NaiveDate::from_ymd_opt(FIRST_YEAR, 1, 1).expect("valid date");
    let offset = (6 + 7 - first.weekday().num_days_from_sunday()) % 7;
    let mut d = first + chrono::Duration::days(offset as i64);
    let mut out = Vec::new();
    while d.year() <= LAST_YEAR {
        out.push(d);
        d += chrono::Duration::days(7);
    }
    out
}

/// Weekly carloads per component, keyed by week-ending Saturday.
pub fn rail_weekly(seed: u64) -> Vec<(String, TimeSeries)> {
    let weeks = saturdays();
    let n_months = months_since_start(LAST_YEAR, 12) + 1;
    COMPONENTS
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 * k as u64));
            let monthly = ar1_path(&mut rng, n_months, 0.5, c.monthly_sd);
            let values = weeks
                .iter()
                .map(|d| {
                    let (y, m) = (d.year(), d.month());
                    let t = months_since_start(y, m);
                    let years = (d.ordinal0() as f64 / 365.25) + (y - FIRST_YEAR) as f64;
                    let season = c.amplitude * (2.0 * PI * (m as f64 - c.phase) / 12.0).cos()
                        - if m == 12 { c.december } else { 0.0 };
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let log = c.level.ln() + c.growth * years + season + monthly[t] + c.weekly_sd * z;
                    let mut v = log.exp() * (1.0 - c.recession_depth * recession(y, m));
                    if y == 2020 {
                        v *= c.covid[m as usize - 1];
                    }
                    v
                })
                .collect();
            let series = TimeSeries::new(Period::week_ending(weeks[0]), values).expect("finite values");
            (c.name.to_string(), series)
        })
        .collect()
}

/// Monthly indicators: `pce` and `ip`.
pub fn indicators(seed: u64) -> Vec<(String, TimeSeries)> {
    let n = months_since_start(LAST_YEAR, 12) + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1dc0);
    let specs: [(&str, f64, f64, f64, f64, [f64; 12]); 2] = [
        (
            "pce",
            100.0,
            0.004,
            0.006,
            0.1,
            [1.0, 1.0, 0.9, 0.82, 0.95, 1.05, 1.08, 1.09, 1.1, 1.1, 1.1, 1.1],
        ),
        (
            "ip",
            95.0,
            0.0008,
            0.004,
            0.16,
            [1.0, 1.0, 0.96, 0.84, 0.86, 0.9, 0.93, 0.94, 0.95, 0.95, 0.96, 0.96],
        ),
    ];
    specs
        .iter()
        .map(|&(name, level, growth, sd, depth, covid)| {
            // integrated AR(1) growth noise keeps the series smooth
            let shocks = ar1_path(&mut rng, n, 0.3, sd);
            let mut log = level.ln();
            let values = (0..n)
                .map(|t| {
                    let (y, m) = (FIRST_YEAR + (t / 12) as i32, (t % 12) as u32 + 1);
                    log += growth + shocks[t];
                    let mut v = log.exp() * (1.0 - depth * recession(y, m));
                    if y == 2020 {
                        v *= covid[m as usize - 1];
                    }
                    v
                })
                .collect();
            (name.to_string(), TimeSeries::monthly(FIRST_YEAR, 1, values).expect("finite values"))
        })
        .collect()
}

fn write_wide(path: &Path, date_header: &str, series: &[(String, TimeSeries)], decimals: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let mut header = vec![date_header.to_string()];
    header.extend(series.iter().map(|(n, _)| n.clone()));
    let io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(&header).map_err(io)?;
    let first = &series[0].1;
    for (i, p) in first.periods().enumerate() {
        let mut row = vec![p.to_string()];
        row.extend(series.iter().map(|(_, s)| format!("{:.*}", decimals, s.values()[i])));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the rail and indicator CSVs into `dir`.
pub fn write_bundle(dir: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_wide(&dir.join(RAIL_FILE), "week_ending", &rail_weekly(seed), 1)?;
    write_wide(&dir.join(INDICATOR_FILE), "date", &indicators(seed), 4)
}
