//! Augmented Dickey-Fuller unit-root test.
//!
//! p-values use MacKinnon's (1994) response-surface regressions for a single
//! integrated variable, and critical values use the finite-sample
//! polynomials of MacKinnon (2010), "Critical Values for Cointegration
//! Tests", Table 2 (N = 1). The constants are the ones shipped by
//! statsmodels' `adfvalues` module.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::ols;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicTerms {
    Constant,
    ConstantTrend,
}

/// How many lagged differences enter the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfLags {
    /// `floor(12 * (n / 100)^(1/4))`, capped so the regression stays
    /// estimable.
    #[default]
    Schwert,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub lags_used: usize,
    pub nobs: usize,
    pub deterministic_terms: DeterministicTerms,
    /// Critical values at the 1%, 5% and 10% levels.
    pub critical_values: [f64; 3],
}

impl AdfResult {
    pub fn rejects_unit_root(&self, level: f64) -> bool {
        self.p_value < level
    }
}

struct Surface {
    max_stat: f64,
    min_stat: f64,
    star_stat: f64,
    small_p: [f64; 3],
    large_p: [f64; 4],
    crit_2010: [[f64; 4]; 3],
}

const CONSTANT: Surface = Surface {
    max_stat: 2.74,
    min_stat: -18.83,
    star_stat: -1.61,
    small_p: [2.1659, 1.4412, 3.8269e-2],
    large_p: [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2],
    crit_2010: [
        [-3.43035, -6.5393, -16.786, -79.433],
        [-2.86154, -2.8903, -4.234, -40.040],
        [-2.56677, -1.5384, -2.809, 0.0],
    ],
};

const CONSTANT_TREND: Surface = Surface {
    max_stat: 0.7,
    min_stat: -16.18,
    star_stat: -2.89,
    small_p: [3.2512, 1.6047, 4.9588e-2],
    large_p: [2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2],
    crit_2010: [
        [-3.95877, -9.0531, -28.428, -134.155],
        [-3.41049, -4.3904, -9.036, -45.374],
        [-3.12705, -2.5856, -3.925, -22.380],
    ],
};

fn surface(terms: DeterministicTerms) -> &'static Surface {
    match terms {
        DeterministicTerms::Constant => &CONSTANT,
        DeterministicTerms::ConstantTrend => &CONSTANT_TREND,
    }
}

fn poly(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// MacKinnon approximate p-value of an ADF statistic.
pub fn mackinnon_p_value(statistic: f64, terms: DeterministicTerms) -> f64 {
    let s = surface(terms);
    if statistic > s.max_stat {
        return 1.0;
    }
    if statistic < s.min_stat {
        return 0.0;
    }
    let z = if statistic <= s.star_stat {
        poly(&s.small_p, statistic)
    } else {
        poly(&s.large_p, statistic)
    };
    Normal::standard().cdf(z)
}

pub fn mackinnon_critical_values(nobs: usize, terms: DeterministicTerms) -> [f64; 3] {
    let inv = 1.0 / nobs as f64;
    surface(terms)
        .crit_2010
        .map(|b| b[0] + b[1] * inv + b[2] * inv * inv + b[3] * inv * inv * inv)
}

pub fn schwert_lags(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

pub fn adf_test(x: &[f64], lags: AdfLags, terms: DeterministicTerms) -> Result<AdfResult> {
    let n = x.len();
    if n < 20 {
        return Err(Error::InsufficientData { needed: 20, got: n });
    }
    let n_det = match terms {
        DeterministicTerms::Constant => 1,
        DeterministicTerms::ConstantTrend => 2,
    };
    // keep at least 10 residual degrees of freedom
    let max_feasible = (n - 1).saturating_sub(n_det + 1 + 10) / 2;
    let k = match lags {
        AdfLags::Schwert => schwert_lags(n).min(max_feasible),
        AdfLags::Fixed(k) => {
            if k > max_feasible {
                return Err(Error::InsufficientData {
                    needed: 2 * k + n_det + 12,
                    got: n,
                });
            }
            k
        }
    };
    let dy: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mut rows = Vec::with_capacity(dy.len() - k);
    let mut dep = Vec::with_capacity(dy.len() - k);
    for i in k..dy.len() {
        let mut row = Vec::with_capacity(1 + n_det + k);
        row.push(x[i]);
        row.push(1.0);
        if terms == DeterministicTerms::ConstantTrend {
            row.push((i + 1) as f64);
        }
        row.extend((1..=k).map(|j| dy[i - j]));
        rows.push(row);
        dep.push(dy[i]);
    }
    let fit = ols(&rows, &dep).map_err(|e| match e {
        Error::Degenerate(_) => Error::Degenerate("ADF regression is singular (constant series?)".into()),
        other => other,
    })?;
    if fit.std_errors[0] == 0.0 || !fit.std_errors[0].is_finite() {
        return Err(Error::Degenerate("ADF regression has zero residual variance".into()));
    }
    let statistic = fit.coef[0] / fit.std_errors[0];
    let nobs = dep.len();
    Ok(AdfResult {
        statistic,
        p_value: mackinnon_p_value(statistic, terms),
        lags_used: k,
        nobs,
        deterministic_terms: terms,
        critical_values: mackinnon_critical_values(nobs, terms),
    })
}
