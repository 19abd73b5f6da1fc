//! Regularly indexed time series, calendar periods, transforms, and
//! differencing.
//!
//! Weekly observations are labelled by their week-ending date. When weekly
//! data are averaged to months, a week is assigned to the calendar month
//! that contains its week-ending date.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Monthly,
    Weekly,
}

/// A calendar period: a month, or a week identified by its ending date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Period {
    Month { year: i32, month: u32 },
    Week { ending: NaiveDate },
}

impl Period {
    /// Panics if `month` is not in `1..=12`.
    pub fn month(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Period::Month { year, month }
    }

    pub fn week_ending(ending: NaiveDate) -> Self {
        Period::Week { ending }
    }

    pub fn frequency(&self) -> Frequency {
        match self {
            Period::Month { .. } => Frequency::Monthly,
            Period::Week { .. } => Frequency::Weekly,
        }
    }

    /// Shift by `steps` periods of the same frequency (negative moves back).
    pub fn offset(&self, steps: i64) -> Self {
        match *self {
            Period::Month { year, month } => {
                let idx = year as i64 * 12 + (month as i64 - 1) + steps;
                Period::Month {
                    year: idx.div_euclid(12) as i32,
                    month: (idx.rem_euclid(12) + 1) as u32,
                }
            }
            Period::Week { ending } => Period::Week {
                ending: ending + Duration::days(7 * steps),
            },
        }
    }

    pub fn succ(&self) -> Self {
        self.offset(1)
    }

    /// Number of steps from `self` to `other`; `None` if the frequencies
    /// differ or weekly dates are not a whole number of weeks apart.
    pub fn steps_to(&self, other: &Period) -> Option<i64> {
        match (*self, *other) {
            (Period::Month { year: y0, month: m0 }, Period::Month { year: y1, month: m1 }) => {
                Some((y1 as i64 * 12 + m1 as i64) - (y0 as i64 * 12 + m0 as i64))
            }
            (Period::Week { ending: a }, Period::Week { ending: b }) => {
                let days = (b - a).num_days();
                (days % 7 == 0).then_some(days / 7)
            }
            _ => None,
        }
    }

    /// Calendar month containing this period (for weeks, the month of the
    /// week-ending date).
    pub fn calendar_month(&self) -> Period {
        match *self {
            Period::Month { .. } => *self,
            Period::Week { ending } => Period::Month {
                year: ending.year(),
                month: ending.month(),
            },
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Month { year, month } => write!(f, "{year:04}-{month:02}"),
            Period::Week { ending } => write!(f, "{}", ending.format("%Y-%m-%d")),
        }
    }
}

impl FromStr for Period {
    type Err = String;

    /// `YYYY-MM` parses as a month and `YYYY-MM-DD` as a week-ending date.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Ok(Period::Week { ending: date });
        }
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| format!("'{s}' is not YYYY-MM or YYYY-MM-DD"))?;
        let year: i32 = y.parse().map_err(|_| format!("bad year in '{s}'"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in '{s}'"))?;
        if y.len() != 4 || !(1..=12).contains(&month) {
            return Err(format!("'{s}' is not YYYY-MM or YYYY-MM-DD"));
        }
        Ok(Period::Month { year, month })
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered, contiguous, finite observations starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct TimeSeries {
    start: Period,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSeries {
    start: Period,
    values: Vec<f64>,
}

impl TryFrom<RawSeries> for TimeSeries {
    type Error = Error;
    fn try_from(raw: RawSeries) -> Result<Self> {
        TimeSeries::new(raw.start, raw.values)
    }
}

impl TimeSeries {
    pub fn new(start: Period, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSeries("a series needs at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value {} at {}",
                values[i],
                start.offset(i as i64)
            )));
        }
        Ok(Self { start, values })
    }

    /// Monthly series starting at `year`-`month`.
    pub fn monthly(year: i32, month: u32, values: Vec<f64>) -> Result<Self> {
        Self::new(Period::month(year, month), values)
    }

    pub fn start(&self) -> Period {
        self.start
    }

    pub fn end(&self) -> Period {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn frequency(&self) -> Frequency {
        self.start.frequency()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period_at(&self, index: usize) -> Period {
        self.start.offset(index as i64)
    }

    pub fn periods(&self) -> impl Iterator<Item = Period> + '_ {
        (0..self.values.len()).map(|i| self.period_at(i))
    }

    pub fn index_of(&self, period: &Period) -> Option<usize> {
        let steps = self.start.steps_to(period)?;
        (steps >= 0 && (steps as usize) < self.values.len()).then_some(steps as usize)
    }

    pub fn get(&self, period: &Period) -> Option<f64> {
        self.index_of(period).map(|i| self.values[i])
    }

    /// Same index, new values. The caller guarantees the length matches.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(values.len(), self.values.len());
        Self::new(self.start, values)
    }

    /// Inclusive sub-series `from..=to`.
    pub fn slice_window(&self, from: Period, to: Period) -> Result<TimeSeries> {
        let range_err = || Error::Range {
            from: from.to_string(),
            to: to.to_string(),
        };
        let i0 = self.index_of(&from).ok_or_else(range_err)?;
        let i1 = self.index_of(&to).ok_or_else(range_err)?;
        if i1 < i0 {
            return Err(range_err());
        }
        Ok(TimeSeries {
            start: from,
            values: self.values[i0..=i1].to_vec(),
        })
    }

    pub fn apply_transform(&self, transform: Transform) -> Result<TimeSeries> {
        let values = transform.apply_all(&self.values)?;
        self.with_values(values)
    }

    pub fn difference(&self, spec: DifferenceSpec) -> Result<TimeSeries> {
        let values = difference_values(&self.values, spec)?;
        Ok(TimeSeries {
            start: self.start.offset(spec.span() as i64),
            values,
        })
    }

    /// Inverse of [`TimeSeries::difference`]: `initials` are the first
    /// `spec.span()` values of the undifferenced series.
    pub fn inverse_difference(&self, spec: DifferenceSpec, initials: &[f64]) -> Result<TimeSeries> {
        let values = integrate_values(&self.values, spec, initials)?;
        TimeSeries::new(self.start.offset(-(spec.span() as i64)), values)
    }

    /// Average weekly observations into calendar months.
    pub fn resample_weekly_to_monthly(&self) -> Result<TimeSeries> {
        if self.frequency() != Frequency::Weekly {
            return Err(Error::InvalidSeries(
                "monthly resampling requires a weekly series".into(),
            ));
        }
        let first = self.start.calendar_month();
        let last = self.end().calendar_month();
        let months = first.steps_to(&last).expect("both monthly") as usize + 1;
        // Deviations from each month's first week are summed, so a month of
        // identical weeks averages to exactly that value.
        let mut anchors = vec![0.0; months];
        let mut sums = vec![0.0; months];
        let mut counts = vec![0usize; months];
        for (period, &v) in self.periods().zip(&self.values) {
            let m = first.steps_to(&period.calendar_month()).expect("monthly") as usize;
            if counts[m] == 0 {
                anchors[m] = v;
            }
            sums[m] += v - anchors[m];
            counts[m] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyMonth(first.offset(empty as i64).to_string()));
        }
        let values = anchors
            .iter()
            .zip(&sums)
            .zip(&counts)
            .map(|((a, s), &c)| a + s / c as f64)
            .collect();
        TimeSeries::new(first, values)
    }
}

/// Variance-stabilising transform applied before modelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    None,
    Log,
    Sqrt,
}

impl Transform {
    pub fn name(&self) -> &'static str {
        match self {
            Transform::None => "none",
            Transform::Log => "log",
            Transform::Sqrt => "sqrt",
        }
    }

    pub fn in_domain(&self, x: f64) -> bool {
        match self {
            Transform::None => true,
            Transform::Log => x > 0.0,
            Transform::Sqrt => x >= 0.0,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Transform::None => x,
            Transform::Log => x.ln(),
            Transform::Sqrt => x.sqrt(),
        }
    }

    /// Inverse on the transformed scale. For `Sqrt` the inverse is taken on
    /// the non-negative half-line, so negative inputs map to zero.
    pub fn invert(&self, y: f64) -> f64 {
        match self {
            Transform::None => y,
            Transform::Log => y.exp(),
            Transform::Sqrt => y.max(0.0).powi(2),
        }
    }

    /// `ln |d transform / dx|` at `x`, the per-observation Jacobian term
    /// that puts likelihoods of transformed data on the original scale.
    pub fn log_jacobian(&self, x: f64) -> f64 {
        match self {
            Transform::None => 0.0,
            Transform::Log => -x.ln(),
            Transform::Sqrt => -(2.0 * x.sqrt()).ln(),
        }
    }

    pub fn apply_all(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter()
            .enumerate()
            .map(|(index, &value)| {
                if self.in_domain(value) {
                    Ok(self.apply(value))
                } else {
                    Err(Error::Domain {
                        transform: self.name(),
                        index,
                        value,
                    })
                }
            })
            .collect()
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Non-seasonal order `d`, seasonal order `seasonal_d` at `period`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DifferenceSpec {
    pub d: usize,
    pub seasonal_d: usize,
    pub period: usize,
}

impl DifferenceSpec {
    pub fn new(d: usize, seasonal_d: usize, period: usize) -> Self {
        Self { d, seasonal_d, period }
    }

    pub fn none() -> Self {
        Self::new(0, 0, 1)
    }

    /// Number of observations consumed: `d + D * S`.
    pub fn span(&self) -> usize {
        self.d + self.seasonal_d * self.period
    }

    /// Lags in application order: non-seasonal first, then seasonal.
    pub fn lags(&self) -> impl Iterator<Item = usize> {
        std::iter::repeat_n(1, self.d).chain(std::iter::repeat_n(self.period, self.seasonal_d))
    }

    /// Coefficients of `(1 - L)^d (1 - L^S)^D`, constant term first.
    pub fn polynomial(&self) -> Vec<f64> {
        let mut poly = vec![1.0];
        for lag in self.lags() {
            let mut next = vec![0.0; poly.len() + lag];
            for (i, c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + lag] -= c;
            }
            poly = next;
        }
        poly
    }
}

fn difference_once(x: &[f64], lag: usize) -> Vec<f64> {
    x.iter().skip(lag).zip(x).map(|(a, b)| a - b).collect()
}

/// Applies `d` first differences then `D` seasonal differences.
pub fn difference_values(x: &[f64], spec: DifferenceSpec) -> Result<Vec<f64>> {
    if spec.seasonal_d > 0 && spec.period == 0 {
        return Err(Error::InvalidModel("seasonal period must be positive".into()));
    }
    if spec.span() > 0 && spec.span() >= x.len() {
        return Err(Error::Length {
            len: x.len(),
            reason: format!("differencing consumes {} observations", spec.span()),
        });
    }
    let mut out = x.to_vec();
    for lag in spec.lags() {
        out = difference_once(&out, lag);
    }
    Ok(out)
}

/// Inverts [`difference_values`] given the first `spec.span()` values of
/// the original series.
pub fn integrate_values(diffed: &[f64], spec: DifferenceSpec, initials: &[f64]) -> Result<Vec<f64>> {
    if initials.len() != spec.span() {
        return Err(Error::Length {
            len: initials.len(),
            reason: format!("inverse differencing needs exactly {} initial values", spec.span()),
        });
    }
    let lags: Vec<usize> = spec.lags().collect();
    // heads[j] = leading values of the series after j differencing steps,
    // derived from `initials` alone.
    let mut heads = vec![initials.to_vec()];
    for &lag in &lags[..lags.len().saturating_sub(1)] {
        let prev = heads.last().expect("non-empty");
        heads.push(difference_once(prev, lag));
    }
    let mut out = diffed.to_vec();
    for (j, &lag) in lags.iter().enumerate().rev() {
        let mut level = heads[j][..lag].to_vec();
        level.reserve(out.len());
        for (t, w) in out.iter().enumerate() {
            let v = w + level[t];
            level.push(v);
        }
        out = level;
    }
    Ok(out)
}
