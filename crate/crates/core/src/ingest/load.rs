use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Frequency, Period, TimeSeries, Transform};

/// Where one series comes from and how to read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    /// Local CSV path, relative to the config file.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Remote CSV, fetched only when network access is allowed.
    #[serde(default)]
    pub url: Option<String>,
    /// Built-in synthetic component generated from the run seed.
    #[serde(default)]
    pub synthetic: Option<String>,
    #[serde(default = "default_date_column")]
    pub date_column: String,
    pub value_column: String,
    pub frequency: Frequency,
    /// Average weekly data into calendar months after loading.
    #[serde(default)]
    pub resample_to_monthly: bool,
    /// Transform the data will be modelled under; checked on load.
    #[serde(default)]
    pub transform: Option<Transform>,
}

fn default_date_column() -> String {
    "date".to_string()
}

impl DatasetConfig {
    pub fn csv(name: &str, path: impl Into<PathBuf>, date_column: &str, value_column: &str, frequency: Frequency) -> Self {
        Self {
            name: name.to_string(),
            path: Some(path.into()),
            url: None,
            synthetic: None,
            date_column: date_column.to_string(),
            value_column: value_column.to_string(),
            frequency,
            resample_to_monthly: false,
            transform: None,
        }
    }
}

/// Parses `YYYY-MM-DD` or `YYYY-MM` into a period of the given frequency.
/// Monthly data may carry a full date; the day is ignored.
pub fn parse_period(s: &str, frequency: Frequency) -> std::result::Result<Period, String> {
    let s = s.trim();
    match frequency {
        Frequency::Monthly => {
            if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
                return Ok(Period::month(d.year(), d.month()));
            }
            match s.parse::<Period>()? {
                p @ Period::Month { .. } => Ok(p),
                Period::Week { ending } => Ok(Period::month(ending.year(), ending.month())),
            }
        }
        Frequency::Weekly => NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(Period::week_ending)
            .map_err(|_| format!("'{s}' is not a YYYY-MM-DD week-ending date")),
    }
}

fn find_column(headers: &csv::StringRecord, name: &str, file: &str) -> Result<usize> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse {
        file: file.to_string(),
        row: 1,
        column: name.to_string(),
        message: format!(
            "column not found; header has [{}]",
            headers.iter().collect::<Vec<_>>().join(", ")
        ),
    })
}

/// Reads CSV bytes into a validated series. `file` labels error messages.
pub fn parse_series_csv(bytes: &[u8], config: &DatasetConfig, file: &str) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let parse_err = |row: usize, column: &str, message: String| Error::Parse {
        file: file.to_string(),
        row,
        column: column.to_string(),
        message,
    };
    let headers = reader.headers().map_err(|e| parse_err(1, "", e.to_string()))?.clone();
    let date_idx = find_column(&headers, &config.date_column, file)?;
    let value_idx = find_column(&headers, &config.value_column, file)?;
    let positive_only = matches!(config.transform, Some(Transform::Log));
    let non_negative_only = matches!(config.transform, Some(Transform::Sqrt));

    let mut start: Option<Period> = None;
    let mut expected: Option<Period> = None;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| parse_err(row, "", e.to_string()))?;
        let date_raw = record.get(date_idx).unwrap_or("");
        let value_raw = record.get(value_idx).unwrap_or("");
        let period = parse_period(date_raw, config.frequency).map_err(|m| parse_err(row, &config.date_column, m))?;
        let value: f64 = value_raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(row, &config.value_column, format!("'{value_raw}' is not a finite number")))?;
        if let Some(exp) = expected {
            if period != exp {
                let missing = match exp.steps_to(&period) {
                    Some(s) if s > 0 => exp.to_string(),
                    _ => format!("{exp} (found {period}; dates must increase by one period)"),
                };
                return Err(Error::Gap {
                    file: file.to_string(),
                    missing,
                });
            }
        }
        if (positive_only && value <= 0.0) || (non_negative_only && value < 0.0) {
            return Err(Error::NegativeValue {
                file: file.to_string(),
                row,
                value,
            });
        }
        start.get_or_insert(period);
        expected = Some(period.succ());
        values.push(value);
    }
    let start = start.ok_or_else(|| parse_err(2, &config.value_column, "no data rows".into()))?;
    let series = TimeSeries::new(start, values)?;
    if config.resample_to_monthly {
        if config.frequency != Frequency::Weekly {
            return Err(Error::Config(format!(
                "dataset {}: only weekly data can be resampled to monthly",
                config.name
            )));
        }
        return series.resample_weekly_to_monthly();
    }
    Ok(series)
}

/// Loads a local CSV. Relative paths resolve against `base_dir`.
pub fn load_series_csv(config: &DatasetConfig, base_dir: &Path) -> Result<TimeSeries> {
    let rel = config
        .path
        .as_ref()
        .ok_or_else(|| Error::Config(format!("dataset {} has no path", config.name)))?;
    let path = base_dir.join(rel);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    parse_series_csv(&bytes, config, &path.display().to_string())
}
