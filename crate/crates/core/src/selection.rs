//! Grid search over SARIMA orders: fit every candidate, gate on residual
//! whiteness and convergence, rank by AIC, and score rolling-origin
//! forecast accuracy for review.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{acf, adf_test, pacf, AdfLags, AdfResult, DeterministicTerms};
use crate::error::{Error, Result};
use crate::sarimax::{fit, FitOptions, FittedModel, ModelOrder};
use crate::series::{difference_values, DifferenceSpec, TimeSeries, Transform};

pub const DEFAULT_MAX_GRID: usize = 512;

/// Inclusive `(low, high)` bounds.
pub type Bounds = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CandidateGrid {
    pub p: Bounds,
    pub q: Bounds,
    #[serde(rename = "P")]
    pub seasonal_p: Bounds,
    #[serde(rename = "Q")]
    pub seasonal_q: Bounds,
    /// Empty means "use the ADF recommendation".
    pub d: Vec<usize>,
    #[serde(rename = "D")]
    pub seasonal_d: Vec<usize>,
    #[serde(rename = "S")]
    pub period: usize,
    pub transforms: Vec<Transform>,
    /// `None` applies the default rule (intercept only without differencing).
    pub with_intercept: Option<bool>,
    pub max_size: usize,
}

impl Default for CandidateGrid {
    fn default() -> Self {
        Self {
            p: (0, 2),
            q: (0, 1),
            seasonal_p: (0, 1),
            seasonal_q: (0, 1),
            d: vec![1],
            seasonal_d: vec![1],
            period: 12,
            transforms: vec![Transform::None, Transform::Log],
            with_intercept: None,
            max_size: DEFAULT_MAX_GRID,
        }
    }
}

fn range(b: Bounds) -> std::ops::RangeInclusive<usize> {
    b.0..=b.1
}

impl CandidateGrid {
    /// Grid holding exactly one order.
    pub fn single(order: ModelOrder) -> Self {
        Self {
            p: (order.p, order.p),
            q: (order.q, order.q),
            seasonal_p: (order.seasonal_p, order.seasonal_p),
            seasonal_q: (order.seasonal_q, order.seasonal_q),
            d: vec![order.d],
            seasonal_d: vec![order.seasonal_d],
            period: order.period,
            transforms: vec![order.transform],
            with_intercept: Some(order.with_intercept),
            max_size: 1,
        }
    }

    /// Candidate orders in lexicographic order. `default_d` fills in an
    /// empty `d` list.
    pub fn candidates(&self, default_d: usize) -> Result<Vec<ModelOrder>> {
        for (name, (lo, hi)) in [
            ("p", self.p),
            ("q", self.q),
            ("P", self.seasonal_p),
            ("Q", self.seasonal_q),
        ] {
            if lo > hi {
                return Err(Error::Config(format!("grid bound {name} has low {lo} above high {hi}")));
            }
        }
        if self.transforms.is_empty() || self.seasonal_d.is_empty() {
            return Err(Error::Config("grid needs at least one transform and one D value".into()));
        }
        let ds = if self.d.is_empty() { vec![default_d] } else { self.d.clone() };
        let width = |b: Bounds| b.1 - b.0 + 1;
        let size = width(self.p)
            * width(self.q)
            * width(self.seasonal_p)
            * width(self.seasonal_q)
            * ds.len()
            * self.seasonal_d.len()
            * self.transforms.len();
        if size > self.max_size {
            return Err(Error::GridTooLarge {
                size,
                max: self.max_size,
            });
        }
        let mut out = Vec::with_capacity(size);
        for p in range(self.p) {
            for &d in &ds {
                for q in range(self.q) {
                    for sp in range(self.seasonal_p) {
                        for &sd in &self.seasonal_d {
                            for sq in range(self.seasonal_q) {
                                for &tr in &self.transforms {
                                    let mut o = ModelOrder::sarima(p, d, q, sp, sd, sq, self.period).with_transform(tr);
                                    if let Some(c) = self.with_intercept {
                                        o = o.with_intercept(c);
                                    }
                                    o.validate()?;
                                    out.push(o);
                                }
                            }
                        }
                    }
                }
            }
        }
        out.sort_by_key(|o| o.sort_key());
        out.dedup();
        Ok(out)
    }
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check_pairs(actual, forecast)?;
    if actual.iter().any(|&a| a == 0.0) {
        return Err(Error::Degenerate("MAPE is undefined when an actual value is zero".into()));
    }
    let n = actual.len() as f64;
    Ok(100.0 * actual.iter().zip(forecast).map(|(a, f)| ((a - f) / a).abs()).sum::<f64>() / n)
}

/// Mean absolute deviation between actuals and forecasts.
pub fn mad(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check_pairs(actual, forecast)?;
    let n = actual.len() as f64;
    Ok(actual.iter().zip(forecast).map(|(a, f)| (a - f).abs()).sum::<f64>() / n)
}

fn check_pairs(actual: &[f64], forecast: &[f64]) -> Result<()> {
    if actual.len() != forecast.len() {
        return Err(Error::Alignment(format!(
            "{} actual values against {} forecasts",
            actual.len(),
            forecast.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Length {
            len: 0,
            reason: "no forecast errors to average".into(),
        });
    }
    Ok(())
}

/// Anything that can forecast from an arbitrary history.
pub trait RollingForecaster {
    /// Median forecasts for the `horizon` periods after `history`.
    /// `exog_history` covers the history; `exog_future` covers at least the
    /// forecast periods.
    fn forecast_from(
        &self,
        history: &TimeSeries,
        exog_history: &[TimeSeries],
        exog_future: &[TimeSeries],
        horizon: usize,
    ) -> Result<Vec<f64>>;
}

/// Forecasts with fixed parameters, re-filtering each history.
impl RollingForecaster for FittedModel {
    fn forecast_from(
        &self,
        history: &TimeSeries,
        exog_history: &[TimeSeries],
        exog_future: &[TimeSeries],
        horizon: usize,
    ) -> Result<Vec<f64>> {
        crate::sarimax::predict(&self.order, &self.params, history, exog_history, horizon, exog_future, 0.95)
            .map(|f| f.median)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoldoutPolicy {
    /// Trailing observations scored by rolling-origin forecasts.
    pub eval_len: usize,
    /// Horizon of the long-range metric.
    pub long_horizon: usize,
}

impl Default for HoldoutPolicy {
    fn default() -> Self {
        Self {
            eval_len: 24,
            long_horizon: 12,
        }
    }
}

pub const MIN_ORIGINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestMetrics {
    pub mape_1: f64,
    pub mad_1: f64,
    pub mape_12: f64,
    pub mad_12: f64,
    pub origins_1: usize,
    pub origins_12: usize,
}

/// Rolling-origin accuracy over the last `policy.eval_len` observations.
///
/// The short metric scores each evaluation period by a one-step forecast
/// from the period before it. The long metric scores each evaluation
/// period that lies `long_horizon` steps past an origin by the forecast
/// made at that origin; origins may sit before the evaluation span.
/// Covariates, when present, enter with their realised values.
pub fn backtest_metrics<F: RollingForecaster + ?Sized>(
    model: &F,
    series: &TimeSeries,
    exog: &[TimeSeries],
    policy: &HoldoutPolicy,
) -> Result<BacktestMetrics> {
    let n = series.len();
    let h = policy.long_horizon.max(1);
    if policy.eval_len < MIN_ORIGINS {
        return Err(Error::Config(format!(
            "evaluation span of {} periods has fewer than {MIN_ORIGINS} rolling origins",
            policy.eval_len
        )));
    }
    let first_eval = n.checked_sub(policy.eval_len).filter(|&f| f >= h + 2).ok_or(Error::InsufficientData {
        needed: policy.eval_len + h + 2,
        got: n,
    })?;
    let exog_until = |end: usize| -> Result<Vec<TimeSeries>> {
        exog.iter()
            .map(|x| x.slice_window(series.start(), series.period_at(end - 1)))
            .collect()
    };

    let mut actual_1 = Vec::new();
    let mut pred_1 = Vec::new();
    let mut actual_h = Vec::new();
    let mut pred_h = Vec::new();
    for target in first_eval..n {
        for (step, actual, pred) in [(1, &mut actual_1, &mut pred_1), (h, &mut actual_h, &mut pred_h)] {
            let origin = target + 1 - step;
            let history = series.slice_window(series.start(), series.period_at(origin - 1))?;
            let f = model.forecast_from(&history, &exog_until(origin)?, exog, step)?;
            actual.push(series.values()[target]);
            pred.push(f[step - 1]);
        }
    }
    Ok(BacktestMetrics {
        mape_1: mape(&actual_1, &pred_1)?,
        mad_1: mad(&actual_1, &pred_1)?,
        mape_12: mape(&actual_h, &pred_h)?,
        mad_12: mad(&actual_h, &pred_h)?,
        origins_1: actual_1.len(),
        origins_12: actual_h.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionOptions {
    pub fit: FitOptions,
    pub holdout: HoldoutPolicy,
    /// Ljung-Box p-value below which a candidate fails the whiteness gate.
    pub gate_alpha: f64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            holdout: HoldoutPolicy::default(),
            gate_alpha: 0.05,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub order: ModelOrder,
    pub k_params: usize,
    pub aic: Option<f64>,
    pub loglik: Option<f64>,
    pub ljung_box_p: Option<f64>,
    pub metrics: Option<BacktestMetrics>,
    pub converged: bool,
    pub passes_gates: bool,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub model: Option<Box<FittedModel>>,
}

/// Fits one order and records every field, even on gate failure. Errors
/// are captured in the entry instead of being returned.
pub fn evaluate_candidate(
    order: &ModelOrder,
    series: &TimeSeries,
    exog: &[TimeSeries],
    options: &SelectionOptions,
) -> SelectionEntry {
    let mut entry = SelectionEntry {
        order: *order,
        k_params: order.k_params(exog.len()),
        aic: None,
        loglik: None,
        ljung_box_p: None,
        metrics: None,
        converged: false,
        passes_gates: false,
        error: None,
        warnings: Vec::new(),
        model: None,
    };
    let model = match fit(order, series, exog, &options.fit) {
        Ok(m) => m,
        Err(e) => {
            entry.error = Some(e.to_string());
            return entry;
        }
    };
    entry.aic = Some(model.aic);
    entry.loglik = Some(model.loglik);
    entry.converged = model.converged;
    entry.warnings = model.warnings.clone();
    match model.residual_diagnostics() {
        Ok(d) => entry.ljung_box_p = Some(d.ljung_box.p_value),
        Err(e) => entry.warnings.push(format!("residual diagnostics unavailable: {e}")),
    }
    match backtest_metrics(&model, series, exog, &options.holdout) {
        Ok(m) => entry.metrics = Some(m),
        Err(e) => entry.warnings.push(format!("backtest unavailable: {e}")),
    }
    entry.passes_gates = entry.converged && entry.ljung_box_p.is_some_and(|p| p >= options.gate_alpha);
    entry.model = Some(Box::new(model));
    entry
}

fn tier(e: &SelectionEntry) -> u8 {
    match (e.aic.is_some(), e.passes_gates) {
        (true, true) => 0,
        (true, false) => 1,
        _ => 2,
    }
}

/// Total order: gate-passing fits, then failing fits, then errors; AIC
/// within a tier; fewer parameters; then the order tuple.
pub fn rank_entries(entries: &mut [SelectionEntry]) {
    entries.sort_by(|a, b| {
        tier(a)
            .cmp(&tier(b))
            .then_with(|| match (a.aic, b.aic) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                _ => Ordering::Equal,
            })
            .then_with(|| a.k_params.cmp(&b.k_params))
            .then_with(|| a.order.sort_key().cmp(&b.order.sort_key()))
    });
}

/// Heuristic order hints from the correlogram of the differenced series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderAdvisory {
    /// Leading run of significant partial autocorrelations (cut-off suggests AR order).
    pub suggested_p: usize,
    /// Leading run of significant autocorrelations (cut-off suggests MA order).
    pub suggested_q: usize,
    pub seasonal_acf_significant: bool,
    pub band: f64,
}

fn leading_run(values: &[f64], band: f64, cap: usize) -> usize {
    values.iter().take(cap).take_while(|v| v.abs() > band).count()
}

pub fn order_advisory(diffed: &[f64], period: usize) -> Result<OrderAdvisory> {
    let n = diffed.len();
    let max_lag = period.max(6).min((n.saturating_sub(1)) / 2);
    if max_lag == 0 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    let band = 1.96 / (n as f64).sqrt();
    let a = acf(diffed, max_lag)?;
    let p = pacf(diffed, max_lag)?;
    Ok(OrderAdvisory {
        suggested_p: leading_run(&p.values, band, 3),
        suggested_q: leading_run(&a.values[1..], band, 3),
        seasonal_acf_significant: period <= max_lag && a.values[period].abs() > band,
        band,
    })
}

/// Unit-root check on the (transformed) series: difference until the ADF
/// test rejects at 5%, at most twice.
pub fn recommend_d(transformed: &[f64]) -> Result<(usize, Vec<AdfResult>)> {
    let mut results = Vec::new();
    let mut x = transformed.to_vec();
    for d in 0..=2 {
        let terms = if d == 0 {
            DeterministicTerms::ConstantTrend
        } else {
            DeterministicTerms::Constant
        };
        let r = adf_test(&x, AdfLags::Schwert, terms)?;
        let rejects = r.rejects_unit_root(0.05);
        results.push(r);
        if rejects || d == 2 {
            return Ok((d, results));
        }
        x = difference_values(&x, DifferenceSpec::new(1, 0, 1))?;
    }
    unreachable!()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// Ranked; the winner is first.
    pub entries: Vec<SelectionEntry>,
    pub recommended_d: Option<usize>,
    pub adf: Vec<AdfResult>,
    pub advisory: Option<OrderAdvisory>,
    pub warnings: Vec<String>,
}

impl SelectionReport {
    pub fn winner(&self) -> &SelectionEntry {
        &self.entries[0]
    }

    pub fn winning_model(&self) -> Option<&FittedModel> {
        self.entries[0].model.as_deref()
    }
}

pub fn select_model(
    grid: &CandidateGrid,
    series: &TimeSeries,
    exog: &[TimeSeries],
    options: &SelectionOptions,
) -> Result<SelectionReport> {
    let mut warnings = Vec::new();
    let first_transform = grid.transforms.first().copied().unwrap_or_default();
    let transformed = first_transform.apply_all(series.values())?;
    let (recommended_d, adf) = match recommend_d(&transformed) {
        Ok((d, r)) => (Some(d), r),
        Err(e) => {
            warnings.push(format!("unit-root test skipped: {e}"));
            (None, Vec::new())
        }
    };
    let candidates = grid.candidates(recommended_d.unwrap_or(1))?;
    if candidates.is_empty() {
        return Err(Error::Config("candidate grid is empty".into()));
    }
    let spec = DifferenceSpec::new(
        recommended_d.unwrap_or(1),
        grid.seasonal_d.first().copied().unwrap_or(0),
        grid.period,
    );
    let advisory = match difference_values(&transformed, spec).and_then(|d| order_advisory(&d, grid.period)) {
        Ok(a) => Some(a),
        Err(e) => {
            warnings.push(format!("correlogram advisory skipped: {e}"));
            None
        }
    };

    let evaluate = || -> Vec<SelectionEntry> {
        candidates
            .par_iter()
            .map(|o| evaluate_candidate(o, series, exog, options))
            .collect()
    };
    let mut entries = match options.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(evaluate),
        None => evaluate(),
    };
    if entries.iter().all(|e| e.aic.is_none()) {
        return Err(Error::AllCandidatesFailed);
    }
    rank_entries(&mut entries);
    if !entries[0].passes_gates {
        warnings.push(format!(
            "no candidate passed the convergence and residual-whiteness gates; {} is the best-AIC fallback",
            entries[0].order
        ));
    }
    Ok(SelectionReport {
        entries,
        recommended_d,
        adf,
        advisory,
        warnings,
    })
}
