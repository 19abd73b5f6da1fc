use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample autocorrelations at lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub n: usize,
}

/// Sample partial autocorrelations at lags `1..=max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacfResult {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub n: usize,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Biased (divide-by-n) autocovariances at lags `0..=max_lag`.
pub(crate) fn autocovariances(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    (0..=max_lag)
        .map(|k| {
            centered[k..]
                .iter()
                .zip(&centered)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

pub fn acf(x: &[f64], max_lag: usize) -> Result<AcfResult> {
    if max_lag >= x.len() {
        return Err(Error::InsufficientData {
            needed: max_lag + 1,
            got: x.len(),
        });
    }
    let gamma = autocovariances(x, max_lag);
    if gamma[0] <= 0.0 || !gamma[0].is_finite() {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    Ok(AcfResult {
        lags: (0..=max_lag).collect(),
        values: gamma.iter().map(|g| g / gamma[0]).collect(),
        n: x.len(),
    })
}

/// Partial autocorrelations from the Durbin-Levinson recursion applied to
/// `rho[0..]` (with `rho[0] == 1`).
pub(crate) fn durbin_levinson(rho: &[f64]) -> Vec<f64> {
    let max_lag = rho.len() - 1;
    let mut pacf = Vec::with_capacity(max_lag);
    let mut phi: Vec<f64> = Vec::new();
    for k in 1..=max_lag {
        let num = rho[k] - phi.iter().enumerate().map(|(j, p)| p * rho[k - 1 - j]).sum::<f64>();
        let den = 1.0 - phi.iter().enumerate().map(|(j, p)| p * rho[j + 1]).sum::<f64>();
        let kk = num / den;
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - kk * prev[prev.len() - 1 - j];
        }
        phi.push(kk);
        pacf.push(kk);
    }
    pacf
}

pub fn pacf(x: &[f64], max_lag: usize) -> Result<PacfResult> {
    if 2 * max_lag >= x.len() {
        return Err(Error::InsufficientData {
            needed: 2 * max_lag + 1,
            got: x.len(),
        });
    }
    let r = acf(x, max_lag)?;
    Ok(PacfResult {
        lags: (1..=max_lag).collect(),
        values: durbin_levinson(&r.values),
        n: x.len(),
    })
}

/// Sample Pearson correlation of two equal-length series.
pub fn pearson_corr(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!("lengths {} and {} differ", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: a.len() });
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("correlation of a constant series".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}
