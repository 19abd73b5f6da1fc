use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use freightcast::{DifferenceSpec, Error, Frequency, Period, TimeSeries, Transform};
use proptest::prelude::*;

fn weekly(first_ending: NaiveDate, values: Vec<f64>) -> TimeSeries {
    TimeSeries::new(Period::week_ending(first_ending), values).unwrap()
}

#[test]
fn transforms_map_values_and_keep_the_index() {
    let e = std::f64::consts::E;
    let s = TimeSeries::monthly(2019, 11, vec![1.0, e, e * e]).unwrap();
    let t = s.apply_transform(Transform::Log).unwrap();
    assert_eq!(t.start(), s.start());
    for (a, b) in t.values().iter().zip([0.0, 1.0, 2.0]) {
        assert!((a - b).abs() < 1e-15);
    }
    let r = TimeSeries::monthly(2020, 1, vec![4.0, 9.0]).unwrap();
    assert_eq!(r.apply_transform(Transform::Sqrt).unwrap().values(), &[2.0, 3.0]);
    let z = TimeSeries::monthly(2020, 1, vec![0.0, 1.0]).unwrap();
    assert!(z.apply_transform(Transform::Log).is_err());
}

#[test]
fn differencing_matches_literal_lag_operators() {
    let x: Vec<f64> = (0..24)
        .map(|t| 100.0 + 0.7 * t as f64 + [3.0, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0, -6.0, 5.0, 3.0, -5.0, 8.0][t % 12])
        .collect();
    let s = TimeSeries::monthly(2018, 1, x.clone()).unwrap();
    let got = s.difference(DifferenceSpec::new(1, 1, 12)).unwrap();
    let first: Vec<f64> = (1..x.len()).map(|t| x[t] - x[t - 1]).collect();
    let oracle: Vec<f64> = (12..first.len()).map(|t| first[t] - first[t - 12]).collect();
    assert_eq!(got.len(), 11);
    assert_eq!(got.start(), Period::month(2019, 2));
    for (a, b) in got.values().iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn too_short_for_the_difference_spec() {
    let s = TimeSeries::monthly(2020, 1, vec![1.0; 12]).unwrap();
    assert!(s.difference(DifferenceSpec::new(0, 1, 12)).is_err());
    assert!(s.difference(DifferenceSpec::new(1, 0, 12)).is_ok());
}

#[test]
fn inverse_difference_rejects_wrong_initials() {
    let s = TimeSeries::monthly(2020, 1, vec![2.0, 3.0, 4.0]).unwrap();
    let spec = DifferenceSpec::new(1, 0, 12);
    assert_eq!(
        s.inverse_difference(spec, &[1.0]).unwrap().values(),
        &[1.0, 3.0, 6.0, 10.0]
    );
    assert!(s.inverse_difference(spec, &[]).is_err());
    assert!(s.inverse_difference(spec, &[1.0, 2.0]).is_err());
}

#[test]
fn two_years_of_weeks_average_into_months() {
    let first = NaiveDate::from_ymd_opt(2019, 1, 5).unwrap();
    let values: Vec<f64> = (0..104).map(|i| 50.0 + (i as f64 * 0.37).sin() * 10.0 + i as f64).collect();
    let monthly = weekly(first, values.clone()).resample_weekly_to_monthly().unwrap();
    assert_eq!(monthly.frequency(), Frequency::Monthly);

    let mut groups: BTreeMap<(i32, u32), Vec<f64>> = BTreeMap::new();
    for (i, v) in values.iter().enumerate() {
        let d = first + chrono::Days::new(7 * i as u64);
        groups.entry((d.year(), d.month())).or_default().push(*v);
    }
    assert_eq!(monthly.len(), groups.len());
    let (&(y, m), _) = groups.iter().next().unwrap();
    assert_eq!(monthly.start(), Period::month(y, m));
    for (got, (_, g)) in monthly.values().iter().zip(&groups) {
        let want = g.iter().sum::<f64>() / g.len() as f64;
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn monthly_series_cannot_be_resampled() {
    let s = TimeSeries::monthly(2020, 1, vec![1.0, 2.0]).unwrap();
    assert!(s.resample_weekly_to_monthly().is_err());
}

#[test]
fn training_window_slice() {
    let s = TimeSeries::monthly(2012, 1, (0..108).map(f64::from).collect()).unwrap();
    let w = s.slice_window(Period::month(2012, 1), Period::month(2019, 12)).unwrap();
    assert_eq!(w.len(), 96);
    assert_eq!(w.end(), Period::month(2019, 12));
    let one = s.slice_window(Period::month(2015, 6), Period::month(2015, 6)).unwrap();
    assert_eq!(one.values(), &[41.0]);
    assert!(matches!(
        s.slice_window(Period::month(2011, 12), Period::month(2013, 1)),
        Err(Error::Range { .. })
    ));
    assert!(s.slice_window(Period::month(2014, 1), Period::month(2013, 1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn differencing_round_trips(
        x in prop::collection::vec(-1e3f64..1e3, 40..80),
        d in 0usize..3,
        seasonal_d in 0usize..2,
        period in prop::sample::select(vec![4usize, 12]),
    ) {
        let spec = DifferenceSpec::new(d, seasonal_d, period);
        let s = TimeSeries::monthly(2010, 1, x.clone()).unwrap();
        let diffed = s.difference(spec).unwrap();
        prop_assert_eq!(diffed.len(), x.len() - d - seasonal_d * period);
        let back = diffed.inverse_difference(spec, &x[..spec.span()]).unwrap();
        prop_assert_eq!(back.start(), s.start());
        for (a, b) in back.values().iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn no_differencing_is_the_identity(x in prop::collection::vec(-1e6f64..1e6, 1..40)) {
        let s = TimeSeries::monthly(2000, 7, x.clone()).unwrap();
        let same = s.difference(DifferenceSpec::none()).unwrap();
        prop_assert_eq!(same.values(), &x[..]);
    }

    #[test]
    fn sqrt_then_square_restores(x in prop::collection::vec(0.0f64..1e8, 1..40)) {
        let s = TimeSeries::monthly(2000, 1, x.clone()).unwrap();
        let t = s.apply_transform(Transform::Sqrt).unwrap();
        for (a, b) in t.values().iter().zip(&x) {
            prop_assert!((a * a - b).abs() <= 1e-12 * b.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn constant_weeks_give_constant_months(v in 0.1f64..1e5, weeks in 5usize..60) {
        let first = NaiveDate::from_ymd_opt(2021, 3, 6).unwrap();
        let m = weekly(first, vec![v; weeks]).resample_weekly_to_monthly().unwrap();
        prop_assert!(m.values().iter().all(|x| *x == v));
    }
}
