use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::fit::aligned;
use super::{ModelOrder, ParamVector};
use crate::error::{Error, Result};
use crate::series::{integrate_values, Period, TimeSeries};

/// Draws `n` observations from the model, starting at `start`.
///
/// The ARMA part is run from zero through a burn-in before the first
/// retained value. With differencing, the first `d + D*S` values of the
/// undifferenced series are the leading ARMA draws themselves. Covariates
/// enter as `beta' x_t` on the transformed scale.
pub fn simulate(
    order: &ModelOrder,
    params: &ParamVector,
    start: Period,
    n: usize,
    seed: u64,
    exog: &[TimeSeries],
) -> Result<TimeSeries> {
    order.validate()?;
    params.check(order, exog.len())?;
    if n == 0 {
        return Err(Error::Length {
            len: 0,
            reason: "cannot simulate an empty series".into(),
        });
    }
    if !params.is_stationary() {
        return Err(Error::Instability);
    }
    let spec = order.difference_spec();
    let span = spec.span();
    if n <= span {
        return Err(Error::Length {
            len: n,
            reason: format!("differencing needs more than {span} observations"),
        });
    }
    let covariates = exog
        .iter()
        .map(|x| aligned(x, start, n))
        .collect::<Result<Vec<_>>>()?;

    let ar = params.full_ar(order.period);
    let ma = params.full_ma(order.period);
    let burn = 100 + 10 * (ar.len() + ma.len());
    let sigma = params.sigma2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = burn + n;
    let e: Vec<f64> = (0..total)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect();
    let mut w = vec![0.0; total];
    for t in 0..total {
        let mut v = e[t];
        for (i, a) in ar.iter().enumerate() {
            if t > i {
                v += a * w[t - i - 1];
            }
        }
        for (j, m) in ma.iter().enumerate() {
            if t > j {
                v += m * e[t - j - 1];
            }
        }
        w[t] = v;
    }
    let w = &w[burn..];
    let mu = params.process_mean();

    let y = if span == 0 {
        w.iter().map(|v| v + mu).collect()
    } else {
        let diffed: Vec<f64> = w[span..].iter().map(|v| v + mu).collect();
        integrate_values(&diffed, spec, &w[..span])?
    };
    let values: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(t, yt)| {
            let reg: f64 = params.beta.iter().zip(&covariates).map(|(b, x)| b * x[t]).sum();
            order.transform.invert(yt + reg)
        })
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Instability);
    }
    TimeSeries::new(start, values)
}
