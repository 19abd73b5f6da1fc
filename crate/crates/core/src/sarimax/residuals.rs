use serde::{Deserialize, Serialize};

use crate::diagnostics::{default_lags, ljung_box, LjungBoxResult};
use crate::error::{Error, Result};

/// Moments of the standardized residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub ljung_box: LjungBoxResult,
    pub summary: ResidualSummary,
}

fn summarize(x: &[f64]) -> Result<ResidualSummary> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("residuals have zero variance".into()));
    }
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    Ok(ResidualSummary {
        mean,
        variance: m2,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

/// Ljung-Box test plus summary moments. The lag horizon is the default
/// `min(10, n/5)`, raised if needed so at least one degree of freedom
/// remains after removing the `n_arma` fitted coefficients.
pub fn diagnose_residuals(standardized: &[f64], n_arma: usize) -> Result<ResidualDiagnostics> {
    let summary = summarize(standardized)?;
    let lags = default_lags(standardized.len()).max(n_arma + 1);
    Ok(ResidualDiagnostics {
        ljung_box: ljung_box(standardized, lags, n_arma)?,
        summary,
    })
}
