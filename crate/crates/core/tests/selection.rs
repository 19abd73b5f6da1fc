use freightcast::sarimax::{fit, simulate, FitOptions, ModelOrder, ParamVector};
use freightcast::selection::{
    backtest_metrics, evaluate_candidate, rank_entries, select_model, CandidateGrid, HoldoutPolicy,
    RollingForecaster, SelectionOptions,
};
use freightcast::{Error, Period, Result, TimeSeries, Transform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

fn start() -> Period {
    Period::month(2005, 1)
}

fn quick() -> SelectionOptions {
    SelectionOptions {
        fit: FitOptions {
            compute_std_errors: false,
            ..FitOptions::default()
        },
        ..SelectionOptions::default()
    }
}

fn random_walk(n: usize, level: f64, sigma: f64, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = level;
    let v = (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x += sigma * e;
            x
        })
        .collect();
    TimeSeries::new(start(), v).unwrap()
}

/// Knows the future.
struct Oracle(TimeSeries);

impl RollingForecaster for Oracle {
    fn forecast_from(&self, history: &TimeSeries, _: &[TimeSeries], _: &[TimeSeries], horizon: usize) -> Result<Vec<f64>> {
        let i = history.len();
        Ok(self.0.values()[i..i + horizon].to_vec())
    }
}

#[test]
fn perfect_foresight_scores_zero() {
    let y = random_walk(80, 100.0, 1.0, 1);
    let m = backtest_metrics(&Oracle(y.clone()), &y, &[], &HoldoutPolicy::default()).unwrap();
    assert_eq!((m.mape_1, m.mad_1, m.mape_12, m.mad_12), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(m.origins_1, 24);
    assert_eq!(m.origins_12, 24);
}

#[test]
fn short_series_is_rejected() {
    let y = random_walk(30, 100.0, 1.0, 1);
    assert!(matches!(
        backtest_metrics(&Oracle(y.clone()), &y, &[], &HoldoutPolicy::default()),
        Err(Error::InsufficientData { .. })
    ));
}

#[test]
fn long_horizon_errors_exceed_one_step_errors_on_a_random_walk() {
    let order = ModelOrder::arima(0, 1, 0);
    let wins = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let y = random_walk(120, 200.0, 2.0, seed);
            let m = fit(&order, &y, &[], &FitOptions::default()).unwrap();
            let b = backtest_metrics(&m, &y, &[], &HoldoutPolicy::default()).unwrap();
            b.mape_12 >= b.mape_1
        })
        .count();
    assert!(wins >= 40, "{wins}/50");
}

#[test]
fn white_noise_passes_the_whiteness_gate() {
    let order = ModelOrder::arima(0, 0, 0);
    let passes = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = (0..200)
                .map(|_| 50.0 + Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect();
            let e = evaluate_candidate(&order, &TimeSeries::new(start(), v).unwrap(), &[], &quick());
            e.ljung_box_p.unwrap() > 0.05
        })
        .count();
    assert!(passes >= 45, "{passes}/50");
}

#[test]
fn true_seasonal_order_beats_the_airline_baseline() {
    let truth = ModelOrder::sarima(0, 1, 1, 0, 1, 0, 12);
    let params = ParamVector {
        ma: vec![-0.4],
        ..ParamVector::zeros(&truth, 0)
    };
    let rival = ModelOrder::sarima(0, 1, 0, 0, 1, 0, 12);
    let wins = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let y = simulate(&truth, &params, start(), 192, seed, &[]).unwrap();
            let a = evaluate_candidate(&truth, &y, &[], &quick());
            let b = evaluate_candidate(&rival, &y, &[], &quick());
            a.aic.unwrap() < b.aic.unwrap()
        })
        .count();
    assert!(wins >= 40, "{wins}/50");
}

#[test]
fn gate_failures_rank_after_passing_candidates() {
    let y = random_walk(100, 100.0, 1.0, 3);
    let o1 = ModelOrder::arima(0, 1, 0);
    let o2 = ModelOrder::arima(1, 1, 0);
    let mut good = evaluate_candidate(&o2, &y, &[], &quick());
    let mut bad = evaluate_candidate(&o1, &y, &[], &quick());
    good.passes_gates = true;
    good.aic = Some(10.0);
    bad.converged = false;
    bad.passes_gates = false;
    bad.aic = Some(-1000.0);
    let mut broken = bad.clone();
    broken.aic = None;
    broken.error = Some("failed".into());
    let mut entries = vec![broken, bad, good];
    rank_entries(&mut entries);
    assert!(entries[0].passes_gates);
    assert!(!entries[1].converged && entries[1].aic.is_some());
    assert!(entries[2].error.is_some());
}

#[test]
fn single_candidate_wins() {
    let y = random_walk(100, 100.0, 1.0, 4);
    let order = ModelOrder::arima(0, 1, 1);
    let r = select_model(&CandidateGrid::single(order), &y, &[], &quick()).unwrap();
    assert_eq!(r.entries.len(), 1);
    assert_eq!(r.winner().order, order);
    assert!(r.winning_model().is_some());
}

#[test]
fn ar_data_selects_the_ar_model() {
    let ar1 = ModelOrder::arima(1, 0, 0);
    let params = ParamVector {
        intercept: Some(40.0),
        ar: vec![0.6],
        ..ParamVector::zeros(&ar1, 0)
    };
    let grid = CandidateGrid {
        p: (0, 1),
        q: (0, 1),
        seasonal_p: (0, 0),
        seasonal_q: (0, 0),
        d: vec![0],
        seasonal_d: vec![0],
        transforms: vec![Transform::None],
        ..CandidateGrid::default()
    };
    let wins = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let y = simulate(&ar1, &params, start(), 1000, seed, &[]).unwrap();
            let ar = evaluate_candidate(&ar1, &y, &[], &quick());
            let ma = evaluate_candidate(&ModelOrder::arima(0, 0, 1), &y, &[], &quick());
            ar.aic.unwrap() < ma.aic.unwrap()
        })
        .count();
    assert!(wins >= 40, "{wins}/50");
    // the full grid path agrees on one draw
    let y = simulate(&ar1, &params, start(), 1000, 7, &[]).unwrap();
    let r = select_model(&grid, &y, &[], &quick()).unwrap();
    assert_eq!(r.entries.len(), 4);
    assert!(r.winner().order.p == 1);
}

fn multiplicative_walk(n: usize, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lx = 3.0;
    let v = (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            lx += 0.03 + 0.05 * e;
            lx.exp()
        })
        .collect();
    TimeSeries::new(start(), v).unwrap()
}

#[test]
fn log_transform_wins_on_multiplicative_data() {
    let grid = CandidateGrid {
        p: (0, 1),
        q: (0, 0),
        seasonal_p: (0, 0),
        seasonal_q: (0, 0),
        d: vec![1],
        seasonal_d: vec![0],
        transforms: vec![Transform::None, Transform::Log],
        with_intercept: Some(true),
        ..CandidateGrid::default()
    };
    let wins = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let y = multiplicative_walk(150, seed);
            let r = select_model(&grid, &y, &[], &quick()).unwrap();
            r.winner().order.transform == Transform::Log
        })
        .count();
    assert!(wins >= 40, "{wins}/50");
}

#[test]
fn ranking_is_deterministic_and_complete() {
    let y = multiplicative_walk(120, 9);
    let grid = CandidateGrid {
        p: (0, 1),
        q: (0, 1),
        seasonal_p: (0, 0),
        seasonal_q: (0, 0),
        d: vec![1],
        seasonal_d: vec![0],
        ..CandidateGrid::default()
    };
    let a = select_model(&grid, &y, &[], &SelectionOptions { jobs: Some(1), ..quick() }).unwrap();
    let b = select_model(&grid, &y, &[], &SelectionOptions { jobs: Some(3), ..quick() }).unwrap();
    let key = |r: &freightcast::selection::SelectionReport| {
        r.entries.iter().map(|e| (e.order, e.aic.map(f64::to_bits))).collect::<Vec<_>>()
    };
    assert_eq!(key(&a), key(&b));
    let mut orders: Vec<_> = a.entries.iter().map(|e| e.order.sort_key()).collect();
    orders.sort();
    orders.dedup();
    assert_eq!(orders.len(), grid.candidates(1).unwrap().len());
    assert!(a.recommended_d.is_some());
}
