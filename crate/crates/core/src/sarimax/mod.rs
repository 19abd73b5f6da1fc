//! Seasonal ARIMA with optional regression covariates, estimated by exact
//! Gaussian maximum likelihood through a Kalman filter.
//!
//! The model for an observed series `x_t` with covariates `n_t` is
//!
//! ```text
//! z_t = transform(x_t) = beta' n_t + y_t
//! phi(L) Phi(L^S) (1 - L)^d (1 - L^S)^D y_t = c + theta(L) Theta(L^S) e_t
//! ```
//!
//! Differencing is applied to both `z` and `n` before filtering, so the
//! likelihood is conditional on the first `d + D*S` observations. The
//! covariate coefficients are static.

mod fit;
mod forecast;
mod kalman;
mod optimize;
pub(crate) mod polynomial;
mod residuals;
mod simulate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{DifferenceSpec, Period, TimeSeries, Transform};

pub use fit::{fit, kalman_loglik, FitOptions};
pub use forecast::{predict, Forecast};
pub use residuals::{diagnose_residuals, ResidualDiagnostics, ResidualSummary};
pub use simulate::simulate;

/// `(p, d, q)(P, D, Q, S)` plus the transform applied before modelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    #[serde(rename = "P", default)]
    pub seasonal_p: usize,
    #[serde(rename = "D", default)]
    pub seasonal_d: usize,
    #[serde(rename = "Q", default)]
    pub seasonal_q: usize,
    #[serde(rename = "S", default = "default_period")]
    pub period: usize,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default)]
    pub with_intercept: bool,
}

fn default_period() -> usize {
    12
}

impl ModelOrder {
    /// Non-seasonal ARIMA. The intercept is included only when `d == 0`.
    pub fn arima(p: usize, d: usize, q: usize) -> Self {
        Self::sarima(p, d, q, 0, 0, 0, 12)
    }

    /// Seasonal ARIMA. The intercept is included only when `d + D == 0`.
    pub fn sarima(p: usize, d: usize, q: usize, seasonal_p: usize, seasonal_d: usize, seasonal_q: usize, period: usize) -> Self {
        Self {
            p,
            d,
            q,
            seasonal_p,
            seasonal_d,
            seasonal_q,
            period,
            transform: Transform::None,
            with_intercept: d + seasonal_d == 0,
        }
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    pub fn with_intercept(mut self, on: bool) -> Self {
        self.with_intercept = on;
        self
    }

    pub fn is_seasonal(&self) -> bool {
        self.seasonal_p + self.seasonal_d + self.seasonal_q > 0
    }

    pub fn difference_spec(&self) -> DifferenceSpec {
        DifferenceSpec::new(self.d, self.seasonal_d, self.period)
    }

    /// Count of AR and MA coefficients, seasonal included.
    pub fn n_arma(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    /// Estimated parameters including the innovation variance.
    pub fn k_params(&self, n_exog: usize) -> usize {
        self.n_arma() + n_exog + usize::from(self.with_intercept) + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::InvalidModel("seasonal period must be positive".into()));
        }
        if self.is_seasonal() && self.period < 2 {
            return Err(Error::InvalidModel(format!(
                "seasonal terms need a period of at least 2, got {}",
                self.period
            )));
        }
        Ok(())
    }

    /// Sort key used for deterministic tie-breaking.
    pub fn sort_key(&self) -> (usize, usize, usize, usize, usize, usize, usize, Transform, bool) {
        (
            self.p,
            self.d,
            self.q,
            self.seasonal_p,
            self.seasonal_d,
            self.seasonal_q,
            self.period,
            self.transform,
            self.with_intercept,
        )
    }
}

impl fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_seasonal() {
            write!(
                f,
                "SARIMA({},{},{})({},{},{},{})",
                self.p, self.d, self.q, self.seasonal_p, self.seasonal_d, self.seasonal_q, self.period
            )?;
        } else {
            write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)?;
        }
        if self.with_intercept {
            f.write_str("+c")?;
        }
        if self.transform != Transform::None {
            write!(f, " [{}]", self.transform)?;
        }
        Ok(())
    }
}

/// Model coefficients in their natural parameterisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    /// State-equation constant `c`; present iff the order has an intercept.
    pub intercept: Option<f64>,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
}

impl ParamVector {
    /// All coefficients zero, unit variance.
    pub fn zeros(order: &ModelOrder, n_exog: usize) -> Self {
        Self {
            intercept: order.with_intercept.then_some(0.0),
            ar: vec![0.0; order.p],
            ma: vec![0.0; order.q],
            seasonal_ar: vec![0.0; order.seasonal_p],
            seasonal_ma: vec![0.0; order.seasonal_q],
            beta: vec![0.0; n_exog],
            sigma2: 1.0,
        }
    }

    pub fn names(order: &ModelOrder, n_exog: usize) -> Vec<String> {
        let mut names = Vec::new();
        if order.with_intercept {
            names.push("intercept".to_string());
        }
        names.extend((1..=order.p).map(|i| format!("ar.L{i}")));
        names.extend((1..=order.q).map(|i| format!("ma.L{i}")));
        names.extend((1..=order.seasonal_p).map(|i| format!("ar.S.L{}", i * order.period)));
        names.extend((1..=order.seasonal_q).map(|i| format!("ma.S.L{}", i * order.period)));
        names.extend((1..=n_exog).map(|i| format!("beta.{i}")));
        names.push("sigma2".to_string());
        names
    }

    pub(crate) fn to_natural(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend(self.intercept);
        v.extend(&self.ar);
        v.extend(&self.ma);
        v.extend(&self.seasonal_ar);
        v.extend(&self.seasonal_ma);
        v.extend(&self.beta);
        v.push(self.sigma2);
        v
    }

    pub(crate) fn from_natural(order: &ModelOrder, n_exog: usize, v: &[f64]) -> Self {
        let mut it = v.iter().copied();
        let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
        let intercept = order.with_intercept.then(|| take(1)[0]);
        let ar = take(order.p);
        let ma = take(order.q);
        let seasonal_ar = take(order.seasonal_p);
        let seasonal_ma = take(order.seasonal_q);
        let beta = take(n_exog);
        let sigma2 = take(1)[0];
        Self {
            intercept,
            ar,
            ma,
            seasonal_ar,
            seasonal_ma,
            beta,
            sigma2,
        }
    }

    pub fn check(&self, order: &ModelOrder, n_exog: usize) -> Result<()> {
        let dims = [
            (self.ar.len(), order.p, "ar"),
            (self.ma.len(), order.q, "ma"),
            (self.seasonal_ar.len(), order.seasonal_p, "seasonal_ar"),
            (self.seasonal_ma.len(), order.seasonal_q, "seasonal_ma"),
            (self.beta.len(), n_exog, "beta"),
        ];
        for (got, want, what) in dims {
            if got != want {
                return Err(Error::InvalidModel(format!("{what} has {got} coefficients, order needs {want}")));
            }
        }
        if self.intercept.is_some() != order.with_intercept {
            return Err(Error::InvalidModel("intercept presence does not match the order".into()));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidModel(format!("sigma2 must be non-negative, got {}", self.sigma2)));
        }
        if self.to_natural().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("parameters must be finite".into()));
        }
        Ok(())
    }

    /// Expanded AR coefficients of `phi(L) Phi(L^S)`.
    pub fn full_ar(&self, period: usize) -> Vec<f64> {
        polynomial::expand_ar(&self.ar, &self.seasonal_ar, period)
    }

    /// Expanded MA coefficients of `theta(L) Theta(L^S)`.
    pub fn full_ma(&self, period: usize) -> Vec<f64> {
        polynomial::expand_ma(&self.ma, &self.seasonal_ma, period)
    }

    /// Mean of the differenced, covariate-adjusted series: `c / (phi(1) Phi(1))`.
    pub fn process_mean(&self) -> f64 {
        match self.intercept {
            Some(c) => c / (polynomial::ar_at_one(&self.ar) * polynomial::ar_at_one(&self.seasonal_ar)),
            None => 0.0,
        }
    }

    pub fn is_stationary(&self) -> bool {
        polynomial::is_stationary(&self.ar) && polynomial::is_stationary(&self.seasonal_ar)
    }

    pub fn is_invertible(&self) -> bool {
        polynomial::is_invertible(&self.ma) && polynomial::is_invertible(&self.seasonal_ma)
    }
}

/// Result of [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub order: ModelOrder,
    pub params: ParamVector,
    pub param_names: Vec<String>,
    /// Log-likelihood of the observed (untransformed) data: the Gaussian
    /// state-space likelihood of the transformed series plus the log
    /// Jacobian of the transform.
    pub loglik: f64,
    /// Gaussian log-likelihood on the transformed, differenced scale.
    pub gaussian_loglik: f64,
    pub log_jacobian: f64,
    pub aic: f64,
    pub k_params: usize,
    /// Standard errors aligned with `param_names`; `None` when the
    /// numerical Hessian is not positive definite.
    pub std_errors: Option<Vec<f64>>,
    /// Two-sided normal-approximation p-values for the covariate
    /// coefficients.
    pub exog_p_values: Option<Vec<f64>>,
    /// One-step prediction errors on the transformed, differenced scale.
    pub residuals: TimeSeries,
    pub standardized_residuals: Vec<f64>,
    pub nobs_used: usize,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
    /// Training data retained for forecasting.
    pub endog: TimeSeries,
    pub exog: Vec<TimeSeries>,
}

impl FittedModel {
    pub fn n_exog(&self) -> usize {
        self.exog.len()
    }

    pub fn forecast(&self, horizon: usize, future_exog: &[TimeSeries], level: f64) -> Result<Forecast> {
        predict(&self.order, &self.params, &self.endog, &self.exog, horizon, future_exog, level)
    }

    /// One-step-ahead predictions of the transformed, differenced series
    /// over the estimation sample.
    pub fn one_step_predictions(&self) -> Result<Vec<f64>> {
        let prepared = fit::prepare(&self.order, &self.endog, &self.exog)?;
        Ok(prepared
            .diffed
            .iter()
            .zip(self.residuals.values())
            .map(|(z, v)| z - v)
            .collect())
    }

    pub fn residual_diagnostics(&self) -> Result<ResidualDiagnostics> {
        diagnose_residuals(&self.standardized_residuals, self.order.n_arma())
    }

    pub fn training_end(&self) -> Period {
        self.endog.end()
    }
}
