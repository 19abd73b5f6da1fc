use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, ScenarioConfig, SeriesConfig};
use super::fetch::{fetch_indicator_csv, Fetcher};
use super::load::{load_series_csv, DatasetConfig};
use super::report::{render_reports, write_tree, OutputTree};
use crate::diagnostics::{
    acf, adf_test, classical_decompose, pacf, pearson_corr, AcfResult, AdfLags, AdfResult, DecompositionMode,
    DeterministicTerms, PacfResult,
};
use crate::error::{Error, Result};
use crate::sarimax::{fit, FittedModel, ModelOrder, ResidualDiagnostics};
use crate::scenario::{
    best_fit_line, fit_covariate_model, recovery_pace_points, run_scenario, run_with_model, BestFitLine,
    RecoveryPacePoint, ScenarioKind, ScenarioOutcome, Window,
};
use crate::selection::{backtest_metrics, select_model, BacktestMetrics, SelectionOptions, SelectionReport};
use crate::series::{difference_values, Frequency, Period, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Fit,
    Select,
    Scenario,
    RecoveryPace,
    Diagnose,
    All,
}

impl Stage {
    fn fits_series(self) -> bool {
        matches!(self, Stage::Fit | Stage::Select | Stage::Diagnose | Stage::All)
    }

    fn runs_scenario(self, kind: ScenarioKind, recovery_kind: Option<ScenarioKind>) -> bool {
        match self {
            Stage::Scenario | Stage::All => true,
            Stage::RecoveryPace => Some(kind) == recovery_kind,
            _ => false,
        }
    }
}

pub struct RunOptions<'a> {
    pub stage: Stage,
    pub allow_network: bool,
    /// Date that keys the download cache.
    pub fetch_date: NaiveDate,
    pub fetcher: &'a dyn Fetcher,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

/// In-sample and backtest quality of a saved fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub aic: f64,
    pub loglik: f64,
    pub ljung_box_p: Option<f64>,
    pub ljung_box_lags: Option<usize>,
    pub backtest: Option<BacktestMetrics>,
    pub backtest_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    pub nobs: usize,
    pub adf_level: Option<AdfResult>,
    pub adf_differenced: Option<AdfResult>,
    pub acf: Option<AcfResult>,
    pub pacf: Option<PacfResult>,
    /// One seasonal cycle of the additive decomposition of the transformed series.
    pub seasonal_factors: Option<Vec<f64>>,
    pub residuals: Option<ResidualDiagnostics>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SeriesResult {
    pub name: String,
    pub order: Option<ModelOrder>,
    pub selection: Option<SelectionReport>,
    pub model: Option<FittedModel>,
    pub fitness: Option<Fitness>,
    pub diagnostics: Option<SeriesDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub name: String,
    pub series: String,
    pub outcome: ScenarioOutcome,
    pub actual: TimeSeries,
    /// Percent change of freight and covariate against the overlay base.
    pub overlay: Option<Vec<(Period, f64, f64)>>,
    pub correlation: Option<f64>,
    /// Other scenarios that reuse this scenario's SARIMAX fit.
    pub shared_with: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub disruption: Window,
    pub recovery: Window,
    pub points: Vec<RecoveryPacePoint>,
    pub line: Option<BestFitLine>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunResults {
    pub seed: u64,
    pub stage: Stage,
    pub series: Vec<SeriesResult>,
    pub scenarios: Vec<ScenarioResult>,
    pub recovery: Option<RecoveryResult>,
    pub warnings: Vec<String>,
}

fn synthetic_series(name: &str, seed: u64) -> Option<TimeSeries> {
    crate::synthetic::rail_weekly(seed)
        .into_iter()
        .chain(crate::synthetic::indicators(seed))
        .find(|(n, _)| n == name)
        .map(|(_, s)| s)
}

fn load_dataset(config: &RunConfig, d: &DatasetConfig, seed: u64, options: &RunOptions) -> Result<TimeSeries> {
    if d.path.is_some() {
        return load_series_csv(d, &config.base_dir);
    }
    if let Some(url) = &d.url {
        return fetch_indicator_csv(
            url,
            d,
            &config.cache_path(),
            options.fetch_date,
            options.allow_network,
            options.fetcher,
        );
    }
    let name = d.synthetic.as_deref().unwrap_or_default();
    let series = synthetic_series(name, seed)
        .ok_or_else(|| Error::Config(format!("unknown synthetic series '{name}'")))?;
    if series.frequency() != d.frequency {
        return Err(Error::Config(format!(
            "dataset '{}': synthetic series '{name}' is {:?}, config says {:?}",
            d.name,
            series.frequency(),
            d.frequency
        )));
    }
    if d.resample_to_monthly {
        return series.resample_weekly_to_monthly();
    }
    Ok(series)
}

/// Downloads (or reads from cache) every URL-backed dataset.
pub fn fetch_datasets(config: &RunConfig, options: &RunOptions) -> Result<Vec<(String, usize)>> {
    config.validate()?;
    config
        .datasets
        .iter()
        .filter_map(|d| d.url.as_ref().map(|u| (d, u)))
        .map(|(d, url)| {
            let s = fetch_indicator_csv(
                url,
                d,
                &config.cache_path(),
                options.fetch_date,
                options.allow_network,
                options.fetcher,
            )?;
            Ok((d.name.clone(), s.len()))
        })
        .collect()
}

fn fit_data(series: &TimeSeries, sc: &SeriesConfig) -> Result<TimeSeries> {
    match &sc.fit_window {
        Some(w) => series.slice_window(w.from, w.to),
        None => Ok(series.clone()),
    }
}

fn fitness(model: &FittedModel, data: &TimeSeries, config: &RunConfig) -> Fitness {
    let lb = model.residual_diagnostics().ok().map(|d| d.ljung_box);
    let (backtest, backtest_error) = match backtest_metrics(model, data, &[], &config.holdout) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Fitness {
        aic: model.aic,
        loglik: model.loglik,
        ljung_box_p: lb.as_ref().map(|l| l.p_value),
        ljung_box_lags: lb.as_ref().map(|l| l.lags),
        backtest,
        backtest_error,
    }
}

fn diagnose(data: &TimeSeries, order: &ModelOrder, model: Option<&FittedModel>) -> Result<SeriesDiagnostics> {
    let mut notes = Vec::new();
    fn keep<T>(notes: &mut Vec<String>, what: &str, r: Result<T>) -> Option<T> {
        r.map_err(|e| notes.push(format!("{what}: {e}"))).ok()
    }
    let z = order.transform.apply_all(data.values())?;
    let adf_level = keep(&mut notes, "adf on levels", adf_test(&z, AdfLags::Schwert, DeterministicTerms::ConstantTrend));
    let first: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
    let adf_differenced = keep(&mut notes, "adf on first differences", adf_test(&first, AdfLags::Schwert, DeterministicTerms::Constant));
    let diffed = difference_values(&z, order.difference_spec())?;
    let max_lag = (2 * order.period.max(12)).min(diffed.len().saturating_sub(1) / 2);
    let acf = keep(&mut notes, "acf", acf(&diffed, max_lag));
    let pacf = keep(&mut notes, "pacf", pacf(&diffed, max_lag));
    let period = if data.frequency() == Frequency::Monthly { 12 } else { 52 };
    let seasonal_factors = keep(
        &mut notes,
        "decomposition",
        classical_decompose(&z, period, DecompositionMode::Additive).map(|d| d.seasonal[..period].to_vec()),
    );
    let residuals = match model {
        Some(m) => keep(&mut notes, "residual diagnostics", m.residual_diagnostics()),
        None => None,
    };
    Ok(SeriesDiagnostics {
        nobs: data.len(),
        adf_level,
        adf_differenced,
        acf,
        pacf,
        seasonal_factors,
        residuals,
        notes,
    })
}

fn process_series(
    sc: &SeriesConfig,
    data: &TimeSeries,
    config: &RunConfig,
    stage: Stage,
    need_order: bool,
) -> Result<SeriesResult> {
    let wrap = |e: Error| prefix(e, &format!("series '{}'", sc.name));
    let train = fit_data(data, sc).map_err(wrap)?;
    let mut result = SeriesResult {
        name: sc.name.clone(),
        order: sc.order,
        selection: None,
        model: None,
        fitness: None,
        diagnostics: None,
    };
    let fits = stage.fits_series();
    if sc.order.is_none() && (fits || need_order) {
        let grid = sc.grid.as_ref().expect("validated");
        let options = SelectionOptions {
            fit: config.fit,
            holdout: config.holdout,
            ..SelectionOptions::default()
        };
        let report = select_model(grid, &train, &[], &options).map_err(wrap)?;
        result.order = Some(report.winner().order);
        result.model = report.winning_model().cloned();
        result.selection = Some(report);
    }
    if !fits {
        return Ok(result);
    }
    let order = result.order.expect("order resolved above");
    if result.model.is_none() {
        result.model = Some(fit(&order, &train, &[], &config.fit).map_err(wrap)?);
    }
    let model = result.model.as_ref().expect("fitted above");
    result.fitness = Some(fitness(model, &train, config));
    if matches!(stage, Stage::Diagnose | Stage::All) {
        result.diagnostics = Some(diagnose(&train, &order, Some(model)).map_err(wrap)?);
    }
    if stage == Stage::Diagnose {
        result.fitness = None;
    }
    Ok(result)
}

fn prefix(e: Error, context: &str) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{context}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{context}: {m}")),
        Error::InvalidModel(m) => Error::InvalidModel(format!("{context}: {m}")),
        other => other,
    }
}

fn pct_overlay(freight: &TimeSeries, covariate: &TimeSeries, base: Period, to: Period) -> Result<Vec<(Period, f64, f64)>> {
    let f0 = freight.get(&base);
    let c0 = covariate.get(&base);
    let (Some(f0), Some(c0)) = (f0, c0) else {
        return Err(Error::Window(format!("overlay base {base} is outside the freight or covariate data")));
    };
    let steps = base
        .steps_to(&to)
        .filter(|&s| s >= 0)
        .ok_or_else(|| Error::Window(format!("overlay base {base} is after {to}")))?;
    (0..=steps)
        .map(|i| {
            let p = base.offset(i);
            match (freight.get(&p), covariate.get(&p)) {
                (Some(f), Some(c)) => Ok((p, 100.0 * (f / f0 - 1.0), 100.0 * (c / c0 - 1.0))),
                _ => Err(Error::Window(format!("overlay period {p} is missing from the data"))),
            }
        })
        .collect()
}

type GroupKey = (String, String, Period, Period);

fn group_key(sc: &ScenarioConfig) -> Option<GroupKey> {
    sc.kind.uses_covariate().then(|| {
        (
            sc.series.clone(),
            sc.covariate.clone().unwrap_or_default(),
            sc.train.from,
            sc.train.to,
        )
    })
}

struct Inputs<'a> {
    config: &'a RunConfig,
    data: &'a BTreeMap<String, TimeSeries>,
    orders: BTreeMap<String, ModelOrder>,
}

impl Inputs<'_> {
    fn freight(&self, sc: &ScenarioConfig) -> &TimeSeries {
        let series = self.config.series_config(&sc.series).expect("validated");
        &self.data[&series.dataset]
    }

    fn covariate(&self, sc: &ScenarioConfig) -> Option<&TimeSeries> {
        sc.covariate.as_ref().map(|c| &self.data[c])
    }
}

fn run_scenarios(inputs: &Inputs, selected: &[&ScenarioConfig]) -> Result<Vec<ScenarioResult>> {
    let config = inputs.config;
    let mut groups: BTreeMap<GroupKey, Vec<&ScenarioConfig>> = BTreeMap::new();
    for sc in selected {
        if let Some(k) = group_key(sc) {
            groups.entry(k).or_default().push(sc);
        }
    }
    let models: BTreeMap<GroupKey, Arc<FittedModel>> = groups
        .par_iter()
        .map(|(key, members)| {
            let sc = members[0];
            let model = fit_covariate_model(
                inputs.freight(sc),
                inputs.covariate(sc).expect("validated"),
                &inputs.orders[&sc.series],
                &sc.train,
                &config.fit,
            )
            .map_err(|e| prefix(e, &format!("scenario '{}'", sc.name)))?;
            Ok((key.clone(), model))
        })
        .collect::<Result<_>>()?;

    selected
        .par_iter()
        .map(|sc| {
            let spec = config.scenario_spec(sc);
            let freight = inputs.freight(sc);
            let covariate = inputs.covariate(sc);
            let key = group_key(sc);
            let outcome = match &key {
                Some(k) => run_with_model(&spec, freight, covariate.expect("validated"), Arc::clone(&models[k]), &config.fit),
                None => run_scenario(&spec, freight, None, &inputs.orders[&sc.series], &config.fit),
            }
            .map_err(|e| prefix(e, &format!("scenario '{}'", sc.name)))?;
            let shared_with = key
                .as_ref()
                .map(|k| groups[k].iter().filter(|o| o.name != sc.name).map(|o| o.name.clone()).collect())
                .unwrap_or_default();
            let (overlay, correlation) = match covariate {
                Some(c) => {
                    let base = sc.overlay_base.unwrap_or(sc.train.from);
                    let o = pct_overlay(freight, c, base, sc.eval.to)?;
                    let (a, b): (Vec<f64>, Vec<f64>) = o.iter().map(|&(_, a, b)| (a, b)).unzip();
                    let r = pearson_corr(&a, &b).ok();
                    (Some(o), r)
                }
                None => (None, None),
            };
            Ok(ScenarioResult {
                name: sc.name.clone(),
                series: sc.series.clone(),
                outcome,
                actual: freight.clone(),
                overlay,
                correlation,
                shared_with,
            })
        })
        .collect()
}

fn recovery(config: &RunConfig, scenarios: &[ScenarioResult]) -> Result<Option<RecoveryResult>> {
    let Some(rc) = &config.recovery_pace else {
        return Ok(None);
    };
    let (disruption, recovery) = rc.windows()?;
    let impacts: Vec<(String, _)> = scenarios
        .iter()
        .filter(|s| s.outcome.spec.kind == rc.scenario_kind)
        .map(|s| (s.series.clone(), s.outcome.impact.clone()))
        .collect();
    let points = recovery_pace_points(&impacts, &disruption, &recovery)?;
    let mut warnings = Vec::new();
    for name in &rc.exclude {
        if !points.iter().any(|p| &p.name == name) {
            warnings.push(format!("excluded series '{name}' is not among the recovery-pace points"));
        }
    }
    let line = match best_fit_line(&points, &rc.exclude) {
        Ok(l) => Some(l),
        Err(e) => {
            warnings.push(format!("best-fit line skipped: {e}"));
            None
        }
    };
    Ok(Some(RecoveryResult {
        disruption,
        recovery,
        points,
        line,
        warnings,
    }))
}

fn compute_inner(config: &RunConfig, options: &RunOptions, seed: u64) -> Result<RunResults> {
    let stage = options.stage;
    let recovery_kind = config.recovery_pace.as_ref().map(|r| r.scenario_kind);
    let wanted: Vec<&ScenarioConfig> = config
        .scenarios
        .iter()
        .filter(|s| stage.runs_scenario(s.kind, recovery_kind))
        .collect();

    let mut needed: Vec<&str> = Vec::new();
    let mut need_order: Vec<&str> = Vec::new();
    for sc in &config.series {
        let used = stage.fits_series() || wanted.iter().any(|w| w.series == sc.name);
        if used {
            needed.push(&sc.dataset);
        }
        if wanted.iter().any(|w| w.series == sc.name) {
            need_order.push(&sc.name);
        }
    }
    needed.extend(wanted.iter().filter_map(|w| w.covariate.as_deref()));
    needed.sort_unstable();
    needed.dedup();

    let data: BTreeMap<String, TimeSeries> = needed
        .par_iter()
        .map(|name| {
            let d = config.dataset(name).expect("validated");
            load_dataset(config, d, seed, options).map(|s| (name.to_string(), s))
        })
        .collect::<Result<_>>()?;

    let series: Vec<SeriesResult> = config
        .series
        .par_iter()
        .filter(|sc| stage.fits_series() || need_order.contains(&sc.name.as_str()))
        .map(|sc| process_series(sc, &data[&sc.dataset], config, stage, need_order.contains(&sc.name.as_str())))
        .collect::<Result<_>>()?;

    let orders = series.iter().filter_map(|s| s.order.map(|o| (s.name.clone(), o))).collect();
    let inputs = Inputs {
        config,
        data: &data,
        orders,
    };
    let scenarios = run_scenarios(&inputs, &wanted)?;
    let recovery = if matches!(stage, Stage::RecoveryPace | Stage::All) {
        recovery(config, &scenarios)?
    } else {
        None
    };

    let mut warnings = Vec::new();
    for s in &series {
        if let Some(m) = &s.model {
            warnings.extend(m.warnings.iter().map(|w| format!("{}: {w}", s.name)));
        }
        if let Some(sel) = &s.selection {
            warnings.extend(sel.warnings.iter().map(|w| format!("{}: {w}", s.name)));
        }
    }
    let series = match stage {
        Stage::Scenario | Stage::RecoveryPace => Vec::new(),
        _ => series,
    };
    Ok(RunResults {
        seed,
        stage,
        series,
        scenarios,
        recovery,
        warnings,
    })
}

/// Validates the config, loads data and runs the requested stage, all in
/// memory.
pub fn compute(config: &RunConfig, options: &RunOptions) -> Result<RunResults> {
    config.validate()?;
    if options.jobs == Some(0) {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    let seed = options.seed.unwrap_or(config.seed);
    match options.jobs.or(config.jobs) {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(|| compute_inner(config, options, seed)),
        None => compute_inner(config, options, seed),
    }
}

/// Runs a stage and writes its outputs. Nothing is written unless every
/// step succeeds.
pub fn run_pipeline(config: &RunConfig, options: &RunOptions) -> Result<(RunResults, OutputTree)> {
    let results = compute(config, options)?;
    let tree = render_reports(&results);
    let out = options
        .output_dir
        .clone()
        .unwrap_or_else(|| config.output_path());
    write_tree(&tree, &out)?;
    Ok((results, tree))
}
