//! Counterfactual baselines for a disruption period and the impact measures
//! derived from them.
//!
//! Three scenarios are supported:
//! 1. trend continuation: a SARIMA fit on pre-disruption data, forecast
//!    through the evaluation window;
//! 2. covariate-adapted trend: a SARIMAX fit whose covariate path over the
//!    evaluation window is itself projected from a separate model;
//! 3. actual-covariate forecast: the same SARIMAX fit fed the realised
//!    covariate values.
//!
//! Impact is the ratio of actual volume to the baseline median, reported
//! as a deviation `ratio - 1`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sarimax::{fit, FitOptions, FittedModel, Forecast, ModelOrder};
use crate::series::{Period, TimeSeries};

/// Inclusive period range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub from: Period,
    pub to: Period,
}

impl Window {
    pub fn new(from: Period, to: Period) -> Result<Self> {
        match from.steps_to(&to) {
            Some(s) if s >= 0 => Ok(Self { from, to }),
            _ => Err(Error::Range {
                from: from.to_string(),
                to: to.to_string(),
            }),
        }
    }

    pub fn months(from: (i32, u32), to: (i32, u32)) -> Result<Self> {
        Self::new(Period::month(from.0, from.1), Period::month(to.0, to.1))
    }

    pub fn len(&self) -> usize {
        self.from.steps_to(&self.to).map_or(0, |s| s as usize + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, p: &Period) -> bool {
        matches!((self.from.steps_to(p), p.steps_to(&self.to)), (Some(a), Some(b)) if a >= 0 && b >= 0)
    }

    pub fn periods(&self) -> impl Iterator<Item = Period> + '_ {
        (0..self.len()).map(move |i| self.from.offset(i as i64))
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    TrendContinuation,
    CovariateAdaptedTrend,
    ActualCovariateForecast,
}

impl ScenarioKind {
    pub fn number(&self) -> u8 {
        match self {
            Self::TrendContinuation => 1,
            Self::CovariateAdaptedTrend => 2,
            Self::ActualCovariateForecast => 3,
        }
    }

    pub fn uses_covariate(&self) -> bool {
        *self != Self::TrendContinuation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub train_window: Window,
    pub eval_window: Window,
    pub covariate_name: Option<String>,
    pub covariate_model_order: Option<ModelOrder>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kind.uses_covariate() && self.covariate_name.is_none() {
            return Err(Error::Config(format!(
                "scenario {} needs a covariate name",
                self.kind.number()
            )));
        }
        if self.kind == ScenarioKind::CovariateAdaptedTrend && self.covariate_model_order.is_none() {
            return Err(Error::Config("scenario 2 needs a covariate model order".into()));
        }
        match self.train_window.to.steps_to(&self.eval_window.from) {
            Some(s) if s > 0 => Ok(()),
            _ => Err(Error::Window(format!(
                "training window {} must end before evaluation window {}",
                self.train_window, self.eval_window
            ))),
        }
    }

    /// Steps from the end of training through the end of evaluation.
    fn horizon(&self) -> usize {
        self.train_window.to.steps_to(&self.eval_window.to).unwrap_or(0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactPoint {
    pub period: Period,
    pub actual: f64,
    pub baseline: f64,
    /// `None` when the baseline is not positive.
    pub ratio: Option<f64>,
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactSeries {
    pub points: Vec<ImpactPoint>,
}

impl ImpactSeries {
    /// Compares `actual` with the baseline median over `window`.
    pub fn compute(actual: &TimeSeries, baseline: &Forecast, window: &Window) -> Result<Self> {
        let points = window
            .periods()
            .map(|p| {
                let a = actual
                    .get(&p)
                    .ok_or_else(|| Error::Window(format!("no actual value at {p}")))?;
                let b = baseline
                    .median_at(&p)
                    .ok_or_else(|| Error::Window(format!("baseline does not cover {p}")))?;
                let ratio = (b > 0.0).then(|| a / b);
                Ok(ImpactPoint {
                    period: p,
                    actual: a,
                    baseline: b,
                    ratio,
                    deviation: ratio.map(|r| r - 1.0),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { points })
    }

    pub fn deviation_at(&self, p: &Period) -> Option<f64> {
        self.points.iter().find(|x| x.period == *p).and_then(|x| x.deviation)
    }

    /// Mean deviation over `window`; every period must be present.
    pub fn mean_deviation(&self, window: &Window) -> Result<f64> {
        let devs = window
            .periods()
            .map(|p| {
                self.deviation_at(&p)
                    .ok_or_else(|| Error::Window(format!("no deviation at {p} for window {window}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(devs.iter().sum::<f64>() / devs.len() as f64)
    }
}

/// Restricts a forecast to `window`.
pub fn forecast_window(f: &Forecast, window: &Window) -> Result<Forecast> {
    let i0 = f
        .start
        .steps_to(&window.from)
        .filter(|&i| i >= 0)
        .ok_or_else(|| Error::Window(format!("forecast starting {} does not cover {window}", f.start)))? as usize;
    let i1 = i0 + window.len();
    if i1 > f.horizon {
        return Err(Error::Window(format!("forecast of {} steps does not reach {}", f.horizon, window.to)));
    }
    Ok(Forecast {
        start: window.from,
        horizon: window.len(),
        level: f.level,
        median: f.median[i0..i1].to_vec(),
        lower: f.lower[i0..i1].to_vec(),
        upper: f.upper[i0..i1].to_vec(),
        mean_transformed: f.mean_transformed[i0..i1].to_vec(),
        sd_transformed: f.sd_transformed[i0..i1].to_vec(),
    })
}

fn train_slice(series: &TimeSeries, window: &Window) -> Result<TimeSeries> {
    series.slice_window(window.from, window.to)
}

/// Fits `order` to the covariate over `train_window` and forecasts
/// `horizon` steps past it.
pub fn project_covariate(
    covariate: &TimeSeries,
    order: &ModelOrder,
    train_window: &Window,
    horizon: usize,
    options: &FitOptions,
) -> Result<Forecast> {
    let model = fit(order, &train_slice(covariate, train_window)?, &[], options)?;
    model.forecast(horizon, &[], 0.95)
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub spec: ScenarioSpec,
    /// Baseline over the evaluation window.
    pub baseline: Forecast,
    pub impact: ImpactSeries,
    pub model: Arc<FittedModel>,
    /// Covariate path fed to the forecast (scenarios 2 and 3).
    pub covariate_path: Option<TimeSeries>,
    /// Projection of the covariate (scenario 2).
    pub covariate_projection: Option<Forecast>,
}

const LEVEL: f64 = 0.95;

fn finish(
    spec: &ScenarioSpec,
    freight: &TimeSeries,
    model: Arc<FittedModel>,
    future_exog: Option<TimeSeries>,
    projection: Option<Forecast>,
) -> Result<ScenarioOutcome> {
    let exog: Vec<TimeSeries> = future_exog.iter().cloned().collect();
    let full = model.forecast(spec.horizon(), &exog, LEVEL)?;
    let baseline = forecast_window(&full, &spec.eval_window)?;
    let impact = ImpactSeries::compute(freight, &baseline, &spec.eval_window)?;
    Ok(ScenarioOutcome {
        spec: spec.clone(),
        baseline,
        impact,
        model,
        covariate_path: future_exog,
        covariate_projection: projection,
    })
}

fn check_alignment(freight: &TimeSeries, covariate: &TimeSeries, spec: &ScenarioSpec) -> Result<()> {
    if freight.frequency() != covariate.frequency() {
        return Err(Error::Alignment("freight and covariate have different frequencies".into()));
    }
    let needed_to = if spec.kind == ScenarioKind::ActualCovariateForecast {
        spec.eval_window.to
    } else {
        spec.train_window.to
    };
    for p in [spec.train_window.from, needed_to] {
        if covariate.get(&p).is_none() {
            return Err(Error::Alignment(format!(
                "covariate {} does not cover {p}",
                spec.covariate_name.as_deref().unwrap_or("")
            )));
        }
    }
    Ok(())
}

/// SARIMAX fit on the training window, shared by scenarios 2 and 3.
pub fn fit_covariate_model(
    freight: &TimeSeries,
    covariate: &TimeSeries,
    order: &ModelOrder,
    train_window: &Window,
    options: &FitOptions,
) -> Result<Arc<FittedModel>> {
    let endog = train_slice(freight, train_window)?;
    let exog = train_slice(covariate, train_window)?;
    Ok(Arc::new(fit(order, &endog, &[exog], options)?))
}

/// Runs a covariate scenario on an already fitted SARIMAX model.
pub fn run_with_model(
    spec: &ScenarioSpec,
    freight: &TimeSeries,
    covariate: &TimeSeries,
    model: Arc<FittedModel>,
    options: &FitOptions,
) -> Result<ScenarioOutcome> {
    spec.validate()?;
    check_alignment(freight, covariate, spec)?;
    let start = spec.train_window.to.succ();
    match spec.kind {
        ScenarioKind::TrendContinuation => Err(Error::Config("scenario 1 does not use a covariate model".into())),
        ScenarioKind::CovariateAdaptedTrend => {
            let order = spec.covariate_model_order.as_ref().expect("validated");
            let projection = project_covariate(covariate, order, &spec.train_window, spec.horizon(), options)?;
            let path = TimeSeries::new(start, projection.median.clone())?;
            finish(spec, freight, model, Some(path), Some(projection))
        }
        ScenarioKind::ActualCovariateForecast => {
            let path = covariate.slice_window(start, spec.eval_window.to)?;
            finish(spec, freight, model, Some(path), None)
        }
    }
}

/// Builds one scenario from raw series.
pub fn run_scenario(
    spec: &ScenarioSpec,
    freight: &TimeSeries,
    covariate: Option<&TimeSeries>,
    freight_order: &ModelOrder,
    options: &FitOptions,
) -> Result<ScenarioOutcome> {
    spec.validate()?;
    if freight.get(&spec.eval_window.to).is_none() || freight.get(&spec.train_window.from).is_none() {
        return Err(Error::Window(format!(
            "freight data {}..{} does not cover {}..{}",
            freight.start(),
            freight.end(),
            spec.train_window.from,
            spec.eval_window.to
        )));
    }
    if !spec.kind.uses_covariate() {
        let model = Arc::new(fit(freight_order, &train_slice(freight, &spec.train_window)?, &[], options)?);
        return finish(spec, freight, model, None, None);
    }
    let covariate = covariate.ok_or_else(|| {
        Error::Alignment(format!("scenario {} needs covariate data", spec.kind.number()))
    })?;
    check_alignment(freight, covariate, spec)?;
    let model = fit_covariate_model(freight, covariate, freight_order, &spec.train_window, options)?;
    run_with_model(spec, freight, covariate, model, options)
}

/// Scenarios 2 and 3 over one shared SARIMAX fit.
pub fn run_covariate_pair(
    adapted: &ScenarioSpec,
    actual: &ScenarioSpec,
    freight: &TimeSeries,
    covariate: &TimeSeries,
    freight_order: &ModelOrder,
    options: &FitOptions,
) -> Result<(ScenarioOutcome, ScenarioOutcome)> {
    if adapted.kind != ScenarioKind::CovariateAdaptedTrend || actual.kind != ScenarioKind::ActualCovariateForecast {
        return Err(Error::Config("covariate pair needs scenario 2 then scenario 3".into()));
    }
    if adapted.train_window != actual.train_window {
        return Err(Error::Config("scenarios 2 and 3 must share a training window".into()));
    }
    adapted.validate()?;
    actual.validate()?;
    check_alignment(freight, covariate, actual)?;
    let model = fit_covariate_model(freight, covariate, freight_order, &adapted.train_window, options)?;
    let two = run_with_model(adapted, freight, covariate, Arc::clone(&model), options)?;
    let three = run_with_model(actual, freight, covariate, model, options)?;
    Ok((two, three))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
    D,
}

impl Region {
    /// Quadrant rule on deviation coordinates. Boundaries: `x = 0` is A,
    /// `y = 0` with `x < 0` is B, the diagonal `y = x < 0` is C.
    pub fn classify(x: f64, y: f64) -> Self {
        if x >= 0.0 {
            Region::A
        } else if y >= 0.0 {
            Region::B
        } else if y >= x {
            Region::C
        } else {
            Region::D
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Region::A => "no disruption",
            Region::B => "strong rebound",
            Region::C => "gradual recovery",
            Region::D => "further drop",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryPacePoint {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub region: Region,
}

/// Mean deviation over the disruption and recovery windows per component.
pub fn recovery_pace_points(
    impacts: &[(String, ImpactSeries)],
    disruption: &Window,
    recovery: &Window,
) -> Result<Vec<RecoveryPacePoint>> {
    impacts
        .iter()
        .map(|(name, impact)| {
            let x = impact.mean_deviation(disruption)?;
            let y = impact.mean_deviation(recovery)?;
            Ok(RecoveryPacePoint {
                name: name.clone(),
                x,
                y,
                region: Region::classify(x, y),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestFitLine {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
    pub excluded: Vec<String>,
}

/// Least squares of `y` on `x` over points not named in `excluded`.
pub fn best_fit_line(points: &[RecoveryPacePoint], excluded: &[String]) -> Result<BestFitLine> {
    let used: Vec<&RecoveryPacePoint> = points.iter().filter(|p| !excluded.contains(&p.name)).collect();
    if used.len() < 2 {
        return Err(Error::Degenerate(format!("best-fit line needs two points, {} remain", used.len())));
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.x).sum::<f64>() / n;
    let my = used.iter().map(|p| p.y).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.x - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.x - mx) * (p.y - my)).sum();
    let syy: f64 = used.iter().map(|p| (p.y - my).powi(2)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::Degenerate("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(BestFitLine {
        slope,
        intercept,
        r2,
        n: used.len(),
        excluded: excluded.to_vec(),
    })
}

/// Named disruption and recovery windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPreset {
    /// Apr-May 2020 disruption, Oct-Dec 2020 recovery.
    Covid2020,
    /// Q2 2009 disruption, Q4 2009 recovery.
    GreatRecession,
}

impl WindowPreset {
    pub fn windows(&self) -> (Window, Window) {
        let w = |a, b| Window::months(a, b).expect("preset windows are ordered");
        match self {
            Self::Covid2020 => (w((2020, 4), (2020, 5)), w((2020, 10), (2020, 12))),
            Self::GreatRecession => (w((2009, 4), (2009, 6)), w((2009, 10), (2009, 12))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(name: &str, x: f64, y: f64) -> RecoveryPacePoint {
        RecoveryPacePoint {
            name: name.into(),
            x,
            y,
            region: Region::classify(x, y),
        }
    }

    #[test]
    fn region_rules() {
        assert_eq!(Region::classify(-0.2, 0.1), Region::B);
        assert_eq!(Region::classify(-0.3, -0.1), Region::C);
        assert_eq!(Region::classify(-0.1, -0.3), Region::D);
        assert_eq!(Region::classify(-0.2, -0.2), Region::C);
        assert_eq!(Region::classify(0.0, -0.5), Region::A);
        assert_eq!(Region::classify(-0.1, 0.0), Region::B);
        assert_eq!(Region::classify(0.3, 0.3), Region::A);
    }

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..5).map(|i| pt(&i.to_string(), i as f64 * 0.1 - 0.3, 0.5 * (i as f64 * 0.1 - 0.3) + 0.1)).collect();
        let l = best_fit_line(&pts, &[]).unwrap();
        assert!((l.slope - 0.5).abs() < 1e-12 && (l.intercept - 0.1).abs() < 1e-12);
        assert!((l.r2 - 1.0).abs() < 1e-12);
        let two = best_fit_line(&pts[..2], &[]).unwrap();
        assert!((two.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exclusion_and_degenerate_inputs() {
        let pts = vec![pt("a", -0.1, 0.0), pt("b", -0.2, 0.1), pt("auto", -0.8, 0.4)];
        let l = best_fit_line(&pts, &["auto".to_string()]).unwrap();
        assert_eq!(l.n, 2);
        assert!(best_fit_line(&pts[..1], &[]).is_err());
        let same_x = vec![pt("a", -0.1, 0.0), pt("b", -0.1, 0.2)];
        assert!(matches!(best_fit_line(&same_x, &[]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn window_arithmetic() {
        let w = Window::months((2020, 4), (2020, 5)).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.contains(&Period::month(2020, 5)));
        assert!(!w.contains(&Period::month(2020, 6)));
        assert!(Window::months((2020, 5), (2020, 4)).is_err());
    }
}
