use std::sync::Arc;

use freightcast::sarimax::{simulate, FitOptions, ModelOrder, ParamVector};
use freightcast::scenario::{
    project_covariate, run_covariate_pair, run_scenario, ImpactSeries, ScenarioKind, ScenarioSpec, Window,
};
use freightcast::selection::mape;
use freightcast::{Error, Period, TimeSeries, Transform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Monthly series from Jan 2012: log-linear trend, fixed seasonal
/// profile, AR(1) noise with standard deviation `sd` on the log scale.
fn seasonal_series(sd: f64, seed: u64) -> TimeSeries {
    let months = 108;
    let e = normals(months + 50, seed);
    let mut u = 0.0;
    let noise: Vec<f64> = e
        .iter()
        .map(|v| {
            u = 0.5 * u + sd * (1.0f64 - 0.25).sqrt() * v;
            u
        })
        .skip(50)
        .collect();
    let profile = [-0.04, -0.06, 0.0, 0.02, 0.03, 0.05, 0.01, 0.04, 0.03, 0.02, -0.03, -0.07];
    let v = (0..months)
        .map(|t| (8.0 + 0.002 * t as f64 + profile[t % 12] + noise[t]).exp())
        .collect();
    TimeSeries::monthly(2012, 1, v).unwrap()
}

fn spec(kind: ScenarioKind) -> ScenarioSpec {
    ScenarioSpec {
        kind,
        train_window: Window::months((2012, 1), (2019, 12)).unwrap(),
        eval_window: Window::months((2020, 1), (2020, 12)).unwrap(),
        covariate_name: kind.uses_covariate().then(|| "pce".to_string()),
        covariate_model_order: (kind == ScenarioKind::CovariateAdaptedTrend)
            .then(|| ModelOrder::arima(1, 1, 0).with_intercept(true)),
    }
}

fn airline_log() -> ModelOrder {
    ModelOrder::sarima(0, 1, 1, 0, 1, 0, 12).with_transform(Transform::Log)
}

fn shocked(series: &TimeSeries, months: &[u32], factor: f64) -> TimeSeries {
    let v = series
        .periods()
        .zip(series.values())
        .map(|(p, &x)| match p {
            Period::Month { year: 2020, month } if months.contains(&month) => x * factor,
            _ => x,
        })
        .collect();
    TimeSeries::new(series.start(), v).unwrap()
}

#[test]
fn identical_actual_and_baseline_give_zero_deviation() {
    let y = seasonal_series(0.01, 1);
    let out = run_scenario(&spec(ScenarioKind::TrendContinuation), &y, None, &airline_log(), &FitOptions::default()).unwrap();
    let as_actual = out.baseline.median_series();
    let impact = ImpactSeries::compute(&as_actual, &out.baseline, &out.spec.eval_window).unwrap();
    assert!(impact.points.iter().all(|p| p.deviation == Some(0.0)));
}

#[test]
fn deviation_is_scale_invariant() {
    let y = seasonal_series(0.01, 2);
    let out = run_scenario(&spec(ScenarioKind::TrendContinuation), &y, None, &airline_log(), &FitOptions::default()).unwrap();
    let mut scaled = out.baseline.clone();
    scaled.median.iter_mut().for_each(|v| *v *= 3.5);
    let y2 = TimeSeries::new(y.start(), y.values().iter().map(|v| v * 3.5).collect()).unwrap();
    let a = ImpactSeries::compute(&y, &out.baseline, &out.spec.eval_window).unwrap();
    let b = ImpactSeries::compute(&y2, &scaled, &out.spec.eval_window).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p.deviation.unwrap() - q.deviation.unwrap()).abs() < 1e-12);
    }
}

#[test]
fn injected_shock_is_measured() {
    let y = shocked(&seasonal_series(0.01, 3), &[4, 5, 6], 0.8);
    let out = run_scenario(&spec(ScenarioKind::TrendContinuation), &y, None, &airline_log(), &FitOptions::default()).unwrap();
    for m in 4..=6 {
        let d = out.impact.deviation_at(&Period::month(2020, m)).unwrap();
        assert!((d + 0.2).abs() <= 0.03, "month {m}: {d}");
    }
    assert_eq!(out.baseline.horizon, 12);
    assert_eq!(out.baseline.start, Period::month(2020, 1));
}

#[test]
fn undisrupted_series_stays_near_baseline() {
    let ok = (0..30u64)
        .into_par_iter()
        .filter(|&seed| {
            let y = seasonal_series(0.02, 100 + seed);
            let out = run_scenario(&spec(ScenarioKind::TrendContinuation), &y, None, &airline_log(), &FitOptions::default())
                .unwrap();
            let train = y.slice_window(Period::month(2012, 1), Period::month(2019, 12)).unwrap();
            let b = freightcast::selection::backtest_metrics(&*out.model, &train, &[], &Default::default()).unwrap();
            let mean_abs = out.impact.points.iter().map(|p| p.deviation.unwrap().abs()).sum::<f64>() / 12.0;
            mean_abs < 2.0 * b.mape_12 / 100.0
        })
        .count();
    assert!(ok >= 24, "{ok}/30");
}

#[test]
fn covariate_scenarios_share_one_fit() {
    let y = seasonal_series(0.01, 4);
    let x = TimeSeries::monthly(
        2012,
        1,
        normals(108, 5).iter().scan(100.0, |a, e| {
            *a += 0.3 + 0.5 * e;
            Some(*a)
        }).collect(),
    )
    .unwrap();
    let order = airline_log();
    let (two, three) = run_covariate_pair(
        &spec(ScenarioKind::CovariateAdaptedTrend),
        &spec(ScenarioKind::ActualCovariateForecast),
        &y,
        &x,
        &order,
        &FitOptions::default(),
    )
    .unwrap();
    assert!(Arc::ptr_eq(&two.model, &three.model));
    assert_eq!(two.model.n_exog(), 1);
    assert!(two.covariate_projection.is_some() && three.covariate_projection.is_none());
    assert_eq!(
        three.covariate_path.as_ref().unwrap().values(),
        x.slice_window(Period::month(2020, 1), Period::month(2020, 12)).unwrap().values()
    );
}

#[test]
fn exact_projection_makes_scenarios_agree() {
    let y = seasonal_series(0.01, 6);
    let train_x: Vec<f64> = normals(96, 7).iter().scan(100.0, |a, e| {
        *a += 0.3 + 0.5 * e;
        Some(*a)
    }).collect();
    let s2 = spec(ScenarioKind::CovariateAdaptedTrend);
    let train_only = TimeSeries::monthly(2012, 1, train_x.clone()).unwrap();
    let proj = project_covariate(
        &train_only,
        s2.covariate_model_order.as_ref().unwrap(),
        &s2.train_window,
        12,
        &FitOptions::default(),
    )
    .unwrap();
    let mut full = train_x;
    full.extend(&proj.median);
    let x = TimeSeries::monthly(2012, 1, full).unwrap();
    let (two, three) = run_covariate_pair(
        &s2,
        &spec(ScenarioKind::ActualCovariateForecast),
        &y,
        &x,
        &airline_log(),
        &FitOptions::default(),
    )
    .unwrap();
    for (a, b) in two.baseline.median.iter().zip(&three.baseline.median) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn linear_projection_of_a_trend() {
    let e = normals(200, 8);
    let mut u = 0.0;
    let v: Vec<f64> = e
        .iter()
        .scan(1.0, |level, z| {
            u = 0.2 * u + 0.0005 * z;
            *level += 0.004 + u;
            Some(*level)
        })
        .collect();
    let x = TimeSeries::monthly(2005, 1, v).unwrap();
    let train = Window::new(x.start(), x.end()).unwrap();
    let f = project_covariate(&x, &ModelOrder::arima(1, 1, 0).with_intercept(true), &train, 24, &FitOptions::default())
        .unwrap();
    for h in 4..23 {
        let d2 = f.median[h + 1] - 2.0 * f.median[h] + f.median[h - 1];
        assert!(d2.abs() < 1e-6, "horizon {h}: {d2}");
    }
}

#[test]
fn flat_projection_of_a_stationary_covariate() {
    let x = TimeSeries::monthly(2010, 1, normals(120, 9).iter().map(|e| 50.0 + e).collect()).unwrap();
    let mean = x.values().iter().sum::<f64>() / 120.0;
    let train = Window::new(x.start(), x.end()).unwrap();
    let f = project_covariate(&x, &ModelOrder::arima(0, 0, 0), &train, 6, &FitOptions::default()).unwrap();
    for m in &f.median {
        assert!((m - mean).abs() < 1e-4, "{m} vs {mean}");
    }
}

#[test]
fn projection_holdout_error_is_comparable_to_in_sample_error() {
    let order = ModelOrder::arima(1, 1, 0).with_intercept(true);
    let truth = ParamVector {
        intercept: Some(0.2),
        ar: vec![0.4],
        sigma2: 0.25,
        ..ParamVector::zeros(&order, 0)
    };
    let ok = (0..30u64)
        .into_par_iter()
        .filter(|&seed| {
            let mut x = simulate(&order, &truth, Period::month(2000, 1), 132, seed, &[]).unwrap();
            x = TimeSeries::new(x.start(), x.values().iter().map(|v| v + 100.0).collect()).unwrap();
            let train = Window::new(x.start(), x.period_at(119)).unwrap();
            let model = freightcast::sarimax::fit(&order, &x.slice_window(train.from, train.to).unwrap(), &[], &FitOptions::default()).unwrap();
            let fitted: Vec<f64> = model
                .one_step_predictions()
                .unwrap()
                .iter()
                .enumerate()
                .map(|(i, dz)| dz + x.values()[i])
                .collect();
            let in_sample = mape(&x.values()[1..120], &fitted).unwrap();
            let mut preds = Vec::new();
            for t in 120..132 {
                let hist = x.slice_window(x.start(), x.period_at(t - 1)).unwrap();
                let f = freightcast::sarimax::predict(&order, &model.params, &hist, &[], 1, &[], 0.95).unwrap();
                preds.push(f.median[0]);
            }
            let holdout = mape(&x.values()[120..], &preds).unwrap();
            holdout < 3.0 * in_sample
        })
        .count();
    assert!(ok >= 24, "{ok}/30");
}

#[test]
fn specification_errors() {
    let y = seasonal_series(0.01, 1);
    let mut s = spec(ScenarioKind::ActualCovariateForecast);
    s.covariate_name = None;
    assert!(matches!(s.validate(), Err(Error::Config(_))));
    let mut overlap = spec(ScenarioKind::TrendContinuation);
    overlap.eval_window = Window::months((2019, 6), (2020, 6)).unwrap();
    assert!(matches!(overlap.validate(), Err(Error::Window(_))));
    assert!(matches!(
        run_scenario(&spec(ScenarioKind::ActualCovariateForecast), &y, None, &airline_log(), &FitOptions::default()),
        Err(Error::Alignment(_))
    ));
    let short_cov = TimeSeries::monthly(2013, 1, vec![1.0; 60]).unwrap();
    assert!(matches!(
        run_scenario(&spec(ScenarioKind::ActualCovariateForecast), &y, Some(&short_cov), &airline_log(), &FitOptions::default()),
        Err(Error::Alignment(_))
    ));
}
