use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionMode {
    #[default]
    Additive,
}

/// Classical decomposition aligned to the input. Trend and residual are
/// `None` for the first and last `period / 2` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<Option<f64>>,
}

/// Centered moving average of length `period` (a 2x`period` average when
/// `period` is even).
fn centered_moving_average(x: &[f64], period: usize) -> Vec<Option<f64>> {
    let n = x.len();
    let half = period / 2;
    let mut out = vec![None; n];
    for t in half..n.saturating_sub(half) {
        let v = if period % 2 == 1 {
            x[t - half..=t + half].iter().sum::<f64>() / period as f64
        } else {
            let inner: f64 = x[t + 1 - half..t + half].iter().sum();
            (0.5 * x[t - half] + inner + 0.5 * x[t + half]) / period as f64
        };
        out[t] = Some(v);
    }
    out
}

pub fn classical_decompose(x: &[f64], period: usize, mode: DecompositionMode) -> Result<DecompositionResult> {
    let DecompositionMode::Additive = mode;
    if period < 2 {
        return Err(Error::InvalidModel("decomposition period must be at least 2".into()));
    }
    if x.len() < 2 * period {
        return Err(Error::InsufficientData {
            needed: 2 * period,
            got: x.len(),
        });
    }
    let trend = centered_moving_average(x, period);
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (t, tr) in trend.iter().enumerate() {
        if let Some(tr) = tr {
            sums[t % period] += x[t] - tr;
            counts[t % period] += 1;
        }
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let center = means.iter().sum::<f64>() / period as f64;
    let cycle: Vec<f64> = means.iter().map(|m| m - center).collect();
    let seasonal: Vec<f64> = (0..x.len()).map(|t| cycle[t % period]).collect();
    let residual = trend
        .iter()
        .enumerate()
        .map(|(t, tr)| tr.map(|tr| x[t] - tr - seasonal[t]))
        .collect();
    Ok(DecompositionResult {
        trend,
        seasonal,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sinusoid_plus_constant() {
        let s = 12;
        let wave = |t: usize| 3.0 * (2.0 * PI * t as f64 / s as f64).sin();
        let x: Vec<f64> = (0..60).map(|t| 50.0 + wave(t)).collect();
        let d = classical_decompose(&x, s, DecompositionMode::Additive).unwrap();
        for t in 0..60 {
            assert!((d.seasonal[t] - wave(t)).abs() < 1e-6);
            if let Some(r) = d.residual[t] {
                assert!(r.abs() < 1e-6);
            }
        }
        assert!(d.trend[..6].iter().all(Option::is_none));
        assert!(d.trend[54..].iter().all(Option::is_none));
    }

    #[test]
    fn seasonal_sums_to_zero_and_reconstructs() {
        let x: Vec<f64> = (0..49).map(|t| t as f64 * 0.5 + ((t * 31) % 7) as f64).collect();
        for period in [4, 7] {
            let d = classical_decompose(&x, period, DecompositionMode::Additive).unwrap();
            let cycle: f64 = d.seasonal[..period].iter().sum();
            assert!(cycle.abs() < 1e-9);
            for t in 0..x.len() {
                if let (Some(tr), Some(r)) = (d.trend[t], d.residual[t]) {
                    assert!((tr + d.seasonal[t] + r - x[t]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn ramp_trend_is_the_ramp() {
        let x: Vec<f64> = (0..40).map(|t| 2.0 + 0.75 * t as f64).collect();
        for period in [4, 5, 12] {
            let d = classical_decompose(&x, period, DecompositionMode::Additive).unwrap();
            for (t, tr) in d.trend.iter().enumerate() {
                if let Some(tr) = tr {
                    assert!((tr - x[t]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn needs_two_cycles() {
        assert!(matches!(
            classical_decompose(&[1.0; 23], 12, DecompositionMode::Additive),
            Err(Error::InsufficientData { .. })
        ));
    }
}
