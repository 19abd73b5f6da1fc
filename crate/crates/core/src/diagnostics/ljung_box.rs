use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::correlation::acf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxResult {
    pub q_stat: f64,
    pub lags: usize,
    pub df: usize,
    pub p_value: f64,
}

/// Lag horizon used when the caller does not pick one: `min(10, n / 5)`.
pub fn default_lags(n: usize) -> usize {
    10.min(n / 5)
}

/// Ljung-Box portmanteau statistic over lags `1..=lags`, with degrees of
/// freedom reduced by the number of fitted ARMA parameters.
pub fn ljung_box(residuals: &[f64], lags: usize, fitted_params: usize) -> Result<LjungBoxResult> {
    if lags <= fitted_params || lags == 0 {
        return Err(Error::DegreeOfFreedom {
            lags,
            fitted: fitted_params,
        });
    }
    let n = residuals.len();
    if n <= lags {
        return Err(Error::InsufficientData { needed: lags + 1, got: n });
    }
    let rho = acf(residuals, lags)?.values;
    let nf = n as f64;
    let q_stat = nf
        * (nf + 2.0)
        * (1..=lags)
            .map(|k| rho[k] * rho[k] / (nf - k as f64))
            .sum::<f64>();
    let df = lags - fitted_params;
    let p_value = ChiSquared::new(df as f64)
        .map(|d| d.sf(q_stat))
        .map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(LjungBoxResult {
        q_stat,
        lags,
        df,
        p_value: p_value.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn zero_autocorrelation_gives_zero_statistic() {
        // mean zero with the only non-zero product at lag n-1
        let mut x = vec![0.0; 20];
        x[0] = 1.0;
        x[19] = -1.0;
        let r = ljung_box(&x, 10, 0).unwrap();
        assert_eq!(r.q_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df, 10);
    }

    #[test]
    fn matches_formula_on_fixed_vector() {
        let x = [
            0.3, -1.2, 0.8, 2.1, -0.4, -0.9, 1.5, 0.2, -2.2, 0.7, 1.1, -0.3, 0.0, 0.9, -1.6, 0.4, 1.3, -0.8, 0.6, -0.1,
        ];
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let c0: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
        let mut q = 0.0;
        for k in 1..=5 {
            let ck: f64 = (k..x.len()).map(|t| (x[t] - m) * (x[t - k] - m)).sum();
            let r = ck / c0;
            q += r * r / (n - k as f64);
        }
        q *= n * (n + 2.0);
        let got = ljung_box(&x, 5, 1).unwrap();
        assert!((got.q_stat - q).abs() < 1e-10);
        assert_eq!(got.df, 4);
    }

    #[test]
    fn sign_flip_invariance() {
        let x: Vec<f64> = (0..50).map(|t| ((t * 37) % 11) as f64 - 5.0).collect();
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(ljung_box(&x, 8, 0).unwrap().q_stat, ljung_box(&y, 8, 0).unwrap().q_stat);
    }

    #[test]
    fn degrees_of_freedom_must_be_positive() {
        let x: Vec<f64> = (0..50).map(|t| (t as f64).sin()).collect();
        assert!(matches!(ljung_box(&x, 2, 2), Err(Error::DegreeOfFreedom { .. })));
        assert!(matches!(ljung_box(&[1.0; 30], 5, 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn white_noise_size() {
        let mut rejections = 0;
        let seeds = 400;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
            if ljung_box(&e, 10, 0).unwrap().p_value < 0.05 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / seeds as f64;
        assert!((0.02..=0.08).contains(&rate), "rejection rate {rate}");
    }
}
