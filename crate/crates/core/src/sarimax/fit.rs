use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::kalman::{filter, FilterOutput, StateSpace};
use super::optimize::{bfgs, nelder_mead, BfgsSettings};
use super::polynomial::{
    ar_at_one, constrain_ar, constrain_ma, shrink_to_stationary, unconstrain_ar, unconstrain_ma,
};
use super::{FittedModel, ModelOrder, ParamVector};
use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::series::{difference_values, Period, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Gradient tolerance on the per-observation negative log-likelihood.
    pub gtol: f64,
    pub enforce_stationarity: bool,
    pub enforce_invertibility: bool,
    /// Retry from a Nelder-Mead solution when BFGS stalls.
    pub simplex_restart: bool,
    pub compute_std_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            gtol: 1e-6,
            enforce_stationarity: true,
            enforce_invertibility: true,
            simplex_restart: true,
            compute_std_errors: true,
        }
    }
}

/// Transformed and differenced data ready for filtering.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub diffed: Vec<f64>,
    pub exog_diffed: Vec<Vec<f64>>,
    pub log_jacobian: f64,
    pub first_used: Period,
}

/// Values of `series` over `count` periods starting at `start`.
pub(crate) fn aligned(series: &TimeSeries, start: Period, count: usize) -> Result<Vec<f64>> {
    let i0 = series.index_of(&start).ok_or_else(|| {
        Error::Alignment(format!(
            "covariate starting {} does not cover period {start}",
            series.start()
        ))
    })?;
    if i0 + count > series.len() {
        return Err(Error::Alignment(format!(
            "covariate ends at {} but {} is needed",
            series.end(),
            start.offset(count as i64 - 1)
        )));
    }
    Ok(series.values()[i0..i0 + count].to_vec())
}

pub(crate) fn prepare(order: &ModelOrder, endog: &TimeSeries, exog: &[TimeSeries]) -> Result<Prepared> {
    order.validate()?;
    let spec = order.difference_spec();
    let transformed = order.transform.apply_all(endog.values())?;
    let diffed = difference_values(&transformed, spec)?;
    let exog_diffed = exog
        .iter()
        .map(|x| difference_values(&aligned(x, endog.start(), endog.len())?, spec))
        .collect::<Result<Vec<_>>>()?;
    let log_jacobian = endog.values()[spec.span()..]
        .iter()
        .map(|&x| order.transform.log_jacobian(x))
        .sum();
    Ok(Prepared {
        diffed,
        exog_diffed,
        log_jacobian,
        first_used: endog.start().offset(spec.span() as i64),
    })
}

/// Differenced series with covariate effects and the process mean removed.
pub(crate) fn demeaned(prepared: &Prepared, params: &ParamVector) -> Vec<f64> {
    let mu = params.process_mean();
    prepared
        .diffed
        .iter()
        .enumerate()
        .map(|(t, z)| {
            let reg: f64 = params
                .beta
                .iter()
                .zip(&prepared.exog_diffed)
                .map(|(b, x)| b * x[t])
                .sum();
            z - reg - mu
        })
        .collect()
}

pub(crate) fn state_space(order: &ModelOrder, params: &ParamVector) -> StateSpace {
    StateSpace::new(&params.full_ar(order.period), &params.full_ma(order.period), params.sigma2)
}

fn run_filter(order: &ModelOrder, params: &ParamVector, prepared: &Prepared, keep_path: bool) -> Result<FilterOutput> {
    if !params.is_stationary() {
        return Err(Error::Numerical("autoregressive polynomial is not stationary".into()));
    }
    if !(params.sigma2 > 0.0) {
        return Err(Error::Numerical("sigma2 must be positive for the likelihood".into()));
    }
    let w = demeaned(prepared, params);
    filter(&state_space(order, params), &w, keep_path)
}

/// Exact Gaussian log-likelihood of the transformed, differenced series
/// (covariate effects removed) under the ARMA state-space model.
pub fn kalman_loglik(order: &ModelOrder, params: &ParamVector, endog: &TimeSeries, exog: &[TimeSeries]) -> Result<f64> {
    params.check(order, exog.len())?;
    let prepared = prepare(order, endog, exog)?;
    Ok(run_filter(order, params, &prepared, false)?.loglik)
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Maps between the natural parameters and the optimiser's unconstrained,
/// rescaled coordinates.
struct Coordinates<'a> {
    order: &'a ModelOrder,
    n_exog: usize,
    scale_w: f64,
    scale_x: Vec<f64>,
    options: FitOptions,
}

impl Coordinates<'_> {
    fn decode(&self, theta: &[f64]) -> ParamVector {
        let o = self.order;
        let mut i = 0;
        let mut take = |k: usize| {
            let s = theta[i..i + k].to_vec();
            i += k;
            s
        };
        let mu = o.with_intercept.then(|| take(1)[0] * self.scale_w);
        let ar_raw = take(o.p);
        let ma_raw = take(o.q);
        let sar_raw = take(o.seasonal_p);
        let sma_raw = take(o.seasonal_q);
        let beta_raw = take(self.n_exog);
        let log_s2 = take(1)[0];
        let (ar, seasonal_ar) = if self.options.enforce_stationarity {
            (constrain_ar(&ar_raw), constrain_ar(&sar_raw))
        } else {
            (ar_raw, sar_raw)
        };
        let (ma, seasonal_ma) = if self.options.enforce_invertibility {
            (constrain_ma(&ma_raw), constrain_ma(&sma_raw))
        } else {
            (ma_raw, sma_raw)
        };
        let intercept = mu.map(|mu| mu * ar_at_one(&ar) * ar_at_one(&seasonal_ar));
        let beta = beta_raw
            .iter()
            .zip(&self.scale_x)
            .map(|(b, s)| b * self.scale_w / s)
            .collect();
        ParamVector {
            intercept,
            ar,
            ma,
            seasonal_ar,
            seasonal_ma,
            beta,
            sigma2: log_s2.exp() * self.scale_w * self.scale_w,
        }
    }

    fn encode(&self, params: &ParamVector) -> Vec<f64> {
        let mut theta = Vec::new();
        if params.intercept.is_some() {
            theta.push(params.process_mean() / self.scale_w);
        }
        let unc_ar = |c: &[f64]| {
            if self.options.enforce_stationarity {
                unconstrain_ar(c).unwrap_or_else(|| vec![0.0; c.len()])
            } else {
                c.to_vec()
            }
        };
        let unc_ma = |c: &[f64]| {
            if self.options.enforce_invertibility {
                unconstrain_ma(c).unwrap_or_else(|| vec![0.0; c.len()])
            } else {
                c.to_vec()
            }
        };
        theta.extend(unc_ar(&params.ar));
        theta.extend(unc_ma(&params.ma));
        theta.extend(unc_ar(&params.seasonal_ar));
        theta.extend(unc_ma(&params.seasonal_ma));
        theta.extend(params.beta.iter().zip(&self.scale_x).map(|(b, s)| b * s / self.scale_w));
        theta.push((params.sigma2 / (self.scale_w * self.scale_w)).ln());
        theta
    }

    /// Typical magnitude of each natural parameter, for Hessian steps.
    fn natural_scales(&self) -> Vec<f64> {
        let o = self.order;
        let mut s = Vec::new();
        if o.with_intercept {
            s.push(self.scale_w);
        }
        s.extend(std::iter::repeat_n(1.0, o.n_arma()));
        s.extend(self.scale_x.iter().map(|x| self.scale_w / x));
        s.push(self.scale_w * self.scale_w);
        s
    }
}

/// Conditional-least-squares style starting values.
fn starting_values(order: &ModelOrder, prepared: &Prepared) -> ParamVector {
    let n_exog = prepared.exog_diffed.len();
    let mut params = ParamVector::zeros(order, n_exog);
    let z = &prepared.diffed;
    let n = z.len();

    let mut u = z.clone();
    if n_exog > 0 {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|t| {
                let mut row = Vec::with_capacity(n_exog + 1);
                if order.with_intercept {
                    row.push(1.0);
                }
                row.extend(prepared.exog_diffed.iter().map(|x| x[t]));
                row
            })
            .collect();
        if let Ok(fit) = ols(&rows, z) {
            let offset = usize::from(order.with_intercept);
            params.beta = fit.coef[offset..].to_vec();
            for (t, ut) in u.iter_mut().enumerate() {
                *ut -= params
                    .beta
                    .iter()
                    .zip(&prepared.exog_diffed)
                    .map(|(b, x)| b * x[t])
                    .sum::<f64>();
            }
        }
    }
    let mu = if order.with_intercept {
        u.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    let centered: Vec<f64> = u.iter().map(|v| v - mu).collect();
    let mut sigma2 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;

    let lags: Vec<usize> = (1..=order.p)
        .chain((1..=order.seasonal_p).map(|j| j * order.period))
        .collect();
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if !lags.is_empty() && n > max_lag + lags.len() + 5 {
        let rows: Vec<Vec<f64>> = (max_lag..n)
            .map(|t| lags.iter().map(|&l| centered[t - l]).collect())
            .collect();
        if let Ok(fit) = ols(&rows, &centered[max_lag..]) {
            params.ar = shrink_to_stationary(&fit.coef[..order.p]);
            params.seasonal_ar = shrink_to_stationary(&fit.coef[order.p..]);
            if fit.sigma2.is_finite() && fit.sigma2 > 0.0 {
                sigma2 = fit.sigma2;
            }
        }
    }
    if !(sigma2 > 0.0) {
        sigma2 = 1.0;
    }
    params.sigma2 = sigma2;
    if let Some(c) = params.intercept.as_mut() {
        *c = mu * ar_at_one(&params.ar) * ar_at_one(&params.seasonal_ar);
    }
    params
}

fn numerical_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], scales: &[f64]) -> Option<DMatrix<f64>> {
    let n = x.len();
    let h: Vec<f64> = x
        .iter()
        .zip(scales)
        .map(|(v, s)| 1e-4 * v.abs().max(*s))
        .collect();
    let f0 = f(x);
    if !f0.is_finite() {
        return None;
    }
    let eval = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut y = x.to_vec();
        y[di] += si * h[di];
        y[dj] += sj * h[dj];
        f(&y)
    };
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let up = eval(i, 1.0, i, 0.0);
        let down = eval(i, -1.0, i, 0.0);
        hess[(i, i)] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let v = (eval(i, 1.0, j, 1.0) - eval(i, 1.0, j, -1.0) - eval(i, -1.0, j, 1.0) + eval(i, -1.0, j, -1.0))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess.iter().all(|v| v.is_finite()).then_some(hess)
}

/// Maximum-likelihood fit. Non-convergence is reported through
/// [`FittedModel::converged`] rather than as an error.
pub fn fit(order: &ModelOrder, endog: &TimeSeries, exog: &[TimeSeries], options: &FitOptions) -> Result<FittedModel> {
    let n_exog = exog.len();
    let prepared = prepare(order, endog, exog)?;
    let n_used = prepared.diffed.len();
    let k = order.k_params(n_exog);
    if n_used < 5 * k {
        return Err(Error::InsufficientData {
            needed: 5 * k + order.difference_spec().span(),
            got: endog.len(),
        });
    }
    let mut warnings = Vec::new();
    if n_used < 10 * k {
        warnings.push(format!(
            "{n_used} usable observations for {k} parameters; estimates may be unreliable"
        ));
    }

    let scale_w = match std_dev(&prepared.diffed) {
        s if s > 0.0 && s.is_finite() => s,
        _ => 1.0,
    };
    let scale_x = prepared
        .exog_diffed
        .iter()
        .map(|x| match std_dev(x) {
            s if s > 0.0 && s.is_finite() => s,
            _ => 1.0,
        })
        .collect();
    let coords = Coordinates {
        order,
        n_exog,
        scale_w,
        scale_x,
        options: *options,
    };

    let objective = |theta: &[f64]| -> f64 {
        let params = coords.decode(theta);
        match run_filter(order, &params, &prepared, false) {
            Ok(out) if out.loglik.is_finite() => -out.loglik / n_used as f64,
            _ => f64::INFINITY,
        }
    };

    let start = starting_values(order, &prepared);
    let theta0 = coords.encode(&start);
    if !objective(&theta0).is_finite() {
        return Err(Error::Numerical(format!(
            "likelihood is not finite at the starting values for {order}"
        )));
    }
    let settings = BfgsSettings {
        max_iter: options.max_iter,
        gtol: options.gtol,
        ..BfgsSettings::default()
    };
    let mut best = bfgs(&objective, &theta0, settings);
    if !best.converged && options.simplex_restart {
        let simplex = nelder_mead(&objective, &best.x, 0.3, 400 * (theta0.len() + 1));
        let retry = bfgs(&objective, &simplex.x, settings);
        let iterations = best.iterations + simplex.iterations + retry.iterations;
        if retry.f <= best.f || retry.converged {
            best = retry;
        }
        best.iterations = iterations;
    }

    let params = coords.decode(&best.x);
    let out = run_filter(order, &params, &prepared, true)?;
    let loglik = out.loglik + prepared.log_jacobian;

    let mut std_errors = None;
    let mut exog_p_values = None;
    if options.compute_std_errors {
        let natural = params.to_natural();
        let negll = |v: &[f64]| {
            let p = ParamVector::from_natural(order, n_exog, v);
            if p.sigma2 <= 0.0 {
                return f64::INFINITY;
            }
            match run_filter(order, &p, &prepared, false) {
                Ok(o) => -o.loglik,
                Err(_) => f64::INFINITY,
            }
        };
        if let Some(hess) = numerical_hessian(&negll, &natural, &coords.natural_scales()) {
            if let Some(chol) = hess.cholesky() {
                let cov = chol.inverse();
                let se: Vec<f64> = (0..natural.len()).map(|i| cov[(i, i)].sqrt()).collect();
                if se.iter().all(|v| v.is_finite()) {
                    let beta_offset = usize::from(order.with_intercept) + order.n_arma();
                    let normal = Normal::standard();
                    exog_p_values = Some(
                        params
                            .beta
                            .iter()
                            .zip(&se[beta_offset..beta_offset + n_exog])
                            .map(|(b, s)| 2.0 * normal.sf((b / s).abs()))
                            .collect(),
                    );
                    std_errors = Some(se);
                }
            }
        }
        if std_errors.is_none() {
            warnings.push("Hessian is not positive definite; standard errors unavailable".into());
        }
    }
    if !best.converged {
        warnings.push("optimizer did not converge; returning the best parameters found".into());
    }

    let standardized_residuals = out
        .innovations
        .iter()
        .zip(&out.variances)
        .map(|(v, f)| v / f.sqrt())
        .collect();
    let residuals = TimeSeries::new(prepared.first_used, out.innovations)?;
    Ok(FittedModel {
        order: *order,
        param_names: ParamVector::names(order, n_exog),
        params,
        loglik,
        gaussian_loglik: out.loglik,
        log_jacobian: prepared.log_jacobian,
        aic: 2.0 * k as f64 - 2.0 * loglik,
        k_params: k,
        std_errors,
        exog_p_values,
        residuals,
        standardized_residuals,
        nobs_used: n_used,
        converged: best.converged,
        iterations: best.iterations,
        warnings,
        endog: endog.clone(),
        exog: exog
            .iter()
            .map(|x| x.slice_window(endog.start(), endog.end()))
            .collect::<Result<_>>()?,
    })
}
