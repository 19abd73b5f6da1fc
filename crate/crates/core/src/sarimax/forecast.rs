use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::fit::{aligned, demeaned, prepare, state_space};
use super::kalman::{filter, forecast_moments};
use super::{ModelOrder, ParamVector};
use crate::error::{Error, Result};
use crate::series::{difference_values, Period, TimeSeries};

/// Interval forecast on the original scale of the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    /// First forecast period.
    pub start: Period,
    pub horizon: usize,
    pub level: f64,
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Gaussian mean and standard deviation on the transformed scale.
    pub mean_transformed: Vec<f64>,
    pub sd_transformed: Vec<f64>,
}

impl Forecast {
    pub fn periods(&self) -> impl Iterator<Item = Period> + '_ {
        (0..self.horizon).map(move |i| self.start.offset(i as i64))
    }

    pub fn median_series(&self) -> TimeSeries {
        TimeSeries::new(self.start, self.median.clone()).expect("forecast medians are finite")
    }

    /// Median at `period`, if it falls inside the horizon.
    pub fn median_at(&self, period: &Period) -> Option<f64> {
        let i = self.start.steps_to(period)?;
        (i >= 0).then(|| self.median.get(i as usize).copied()).flatten()
    }
}

/// Forecasts `horizon` steps past the end of `endog`.
///
/// `future_exog` must hold one series per covariate, each covering the
/// forecast periods; values before the forecast start are taken from
/// `exog_hist`.
pub fn predict(
    order: &ModelOrder,
    params: &ParamVector,
    endog: &TimeSeries,
    exog_hist: &[TimeSeries],
    horizon: usize,
    future_exog: &[TimeSeries],
    level: f64,
) -> Result<Forecast> {
    if horizon == 0 {
        return Err(Error::Config("forecast horizon must be positive".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("confidence level must be in (0, 1), got {level}")));
    }
    params.check(order, exog_hist.len())?;
    let start = endog.end().succ();
    if future_exog.len() != exog_hist.len() {
        return Err(Error::ExogMissing {
            expected: exog_hist.len(),
            got: future_exog.len(),
            horizon,
        });
    }
    let mut future_diffed = Vec::with_capacity(future_exog.len());
    let spec = order.difference_spec();
    for (hist, fut) in exog_hist.iter().zip(future_exog) {
        let ahead = aligned(fut, start, horizon).map_err(|_| Error::ExogMissing {
            expected: exog_hist.len(),
            got: future_exog.len(),
            horizon,
        })?;
        let mut path = aligned(hist, endog.start(), endog.len())?;
        path.extend(ahead);
        let diffed = difference_values(&path, spec)?;
        future_diffed.push(diffed[diffed.len() - horizon..].to_vec());
    }

    let prepared = prepare(order, endog, exog_hist)?;
    let ss = state_space(order, params);
    let out = filter(&ss, &demeaned(&prepared, params), false)?;
    let (w_mean, w_cov) = forecast_moments(&ss, &out.next_state, &out.next_cov, horizon);

    let mu = params.process_mean();
    let diffed_mean: Vec<f64> = (0..horizon)
        .map(|h| {
            let reg: f64 = params.beta.iter().zip(&future_diffed).map(|(b, x)| b * x[h]).sum();
            w_mean[h] + mu + reg
        })
        .collect();

    // z_t = dz_t - sum_{k>=1} delta_k z_{t-k}
    let delta = spec.polynomial();
    let mut z = order.transform.apply_all(endog.values())?;
    let n = z.len();
    for dz in &diffed_mean {
        let t = z.len();
        let carry: f64 = delta[1..].iter().enumerate().map(|(k, dk)| dk * z[t - k - 1]).sum();
        z.push(dz - carry);
    }
    let mean_transformed = z[n..].to_vec();

    // xi = 1 / delta(L), truncated at the horizon
    let mut xi = vec![0.0; horizon];
    for j in 0..horizon {
        let mut v = if j == 0 { 1.0 } else { 0.0 };
        for k in 1..=j.min(delta.len() - 1) {
            v -= delta[k] * xi[j - k];
        }
        xi[j] = v;
    }
    let sd_transformed: Vec<f64> = (0..horizon)
        .map(|h| {
            let mut var = 0.0;
            for i in 0..=h {
                for j in 0..=h {
                    var += xi[h - i] * xi[h - j] * w_cov[i][j];
                }
            }
            var.max(0.0).sqrt()
        })
        .collect();

    let z_crit = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let tr = order.transform;
    let median = mean_transformed.iter().map(|&m| tr.invert(m)).collect();
    let lower = mean_transformed
        .iter()
        .zip(&sd_transformed)
        .map(|(m, s)| tr.invert(m - z_crit * s))
        .collect();
    let upper = mean_transformed
        .iter()
        .zip(&sd_transformed)
        .map(|(m, s)| tr.invert(m + z_crit * s))
        .collect();
    Ok(Forecast {
        start,
        horizon,
        level,
        median,
        lower,
        upper,
        mean_transformed,
        sd_transformed,
    })
}
