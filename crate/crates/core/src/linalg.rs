//! Small dense least-squares helpers shared by the diagnostics and the
//! engine's starting-value routines.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct OlsFit {
    pub coef: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Residual variance with `n - k` degrees of freedom.
    pub sigma2: f64,
}

/// Ordinary least squares via Householder QR. `rows` are the regressor
/// rows of the design matrix.
pub(crate) fn ols(rows: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    let k = rows.first().map_or(0, Vec::len);
    if n != rows.len() || k == 0 || n <= k {
        return Err(Error::InsufficientData {
            needed: k + 1,
            got: n,
        });
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-12 * max_diag.max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate("regressors are collinear".into()));
    }
    let qty = qr.q().transpose() * &yv;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Degenerate("singular regression".into()))?;
    let fitted = &x * &coef;
    let residuals: Vec<f64> = yv.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = ssr / (n - k) as f64;
    let rinv = r
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular regression".into()))?;
    let xtx_inv = &rinv * rinv.transpose();
    let std_errors = (0..k).map(|i| (sigma2 * xtx_inv[(i, i)]).sqrt()).collect();
    Ok(OlsFit {
        coef: coef.iter().copied().collect(),
        std_errors,
        sigma2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 3.0 - 2.0 * i as f64).collect();
        let fit = ols(&rows, &y).unwrap();
        assert_relative_eq!(fit.coef[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coef[1], -2.0, epsilon = 1e-12);
        assert!(fit.sigma2 < 1e-20);
    }

    #[test]
    fn collinear_design_is_degenerate() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        assert!(ols(&rows, &[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    }
}
