//! Lag-polynomial helpers.
//!
//! AR coefficients `a` describe `1 - a_1 L - ... - a_p L^p`; MA coefficients
//! `m` describe `1 + m_1 L + ... + m_q L^q`.

/// Multiplies two polynomials given constant-term-first.
fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn lag_poly(coefs: &[f64], lag: usize, sign: f64) -> Vec<f64> {
    let mut p = vec![0.0; coefs.len() * lag + 1];
    p[0] = 1.0;
    for (i, c) in coefs.iter().enumerate() {
        p[(i + 1) * lag] = sign * c;
    }
    p
}

/// AR coefficients of `phi(L) Phi(L^S)` in the same sign convention.
pub(crate) fn expand_ar(ar: &[f64], seasonal_ar: &[f64], period: usize) -> Vec<f64> {
    let prod = mul(&lag_poly(ar, 1, -1.0), &lag_poly(seasonal_ar, period, -1.0));
    prod[1..].iter().map(|c| -c).collect()
}

/// MA coefficients of `theta(L) Theta(L^S)`.
pub(crate) fn expand_ma(ma: &[f64], seasonal_ma: &[f64], period: usize) -> Vec<f64> {
    let prod = mul(&lag_poly(ma, 1, 1.0), &lag_poly(seasonal_ma, period, 1.0));
    prod[1..].to_vec()
}

/// `1 - sum(a)`: the AR polynomial evaluated at `L = 1`.
pub(crate) fn ar_at_one(ar: &[f64]) -> f64 {
    1.0 - ar.iter().sum::<f64>()
}

/// Maps partial autocorrelations in (-1, 1) to AR coefficients.
pub(crate) fn ar_from_pacf(r: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(r.len());
    for &rk in r {
        let prev = phi.clone();
        for j in 0..prev.len() {
            phi[j] = prev[j] - rk * prev[prev.len() - 1 - j];
        }
        phi.push(rk);
    }
    phi
}

/// Step-down recursion; `None` if the polynomial is not stationary.
pub(crate) fn pacf_from_ar(ar: &[f64]) -> Option<Vec<f64>> {
    let mut phi = ar.to_vec();
    let mut r = vec![0.0; ar.len()];
    for k in (0..ar.len()).rev() {
        let rk = phi[k];
        if !rk.is_finite() || rk.abs() >= 1.0 {
            return None;
        }
        r[k] = rk;
        let den = 1.0 - rk * rk;
        let prev = phi[..k].to_vec();
        for j in 0..k {
            phi[j] = (prev[j] + rk * prev[k - 1 - j]) / den;
        }
        phi.truncate(k);
    }
    Some(r)
}

/// Whether `1 - sum a_i L^i` has all roots outside the unit circle.
pub(crate) fn is_stationary(ar: &[f64]) -> bool {
    pacf_from_ar(ar).is_some()
}

/// Whether `1 + sum m_i L^i` has all roots outside the unit circle.
pub(crate) fn is_invertible(ma: &[f64]) -> bool {
    let neg: Vec<f64> = ma.iter().map(|m| -m).collect();
    is_stationary(&neg)
}

/// Unconstrained reals to stationary AR coefficients.
pub(crate) fn constrain_ar(x: &[f64]) -> Vec<f64> {
    let r: Vec<f64> = x.iter().map(|v| v / (1.0 + v * v).sqrt()).collect();
    ar_from_pacf(&r)
}

pub(crate) fn unconstrain_ar(ar: &[f64]) -> Option<Vec<f64>> {
    pacf_from_ar(ar).map(|r| r.iter().map(|v| v / (1.0 - v * v).sqrt()).collect())
}

/// Unconstrained reals to invertible MA coefficients.
pub(crate) fn constrain_ma(x: &[f64]) -> Vec<f64> {
    constrain_ar(x).into_iter().map(|v| -v).collect()
}

pub(crate) fn unconstrain_ma(ma: &[f64]) -> Option<Vec<f64>> {
    let neg: Vec<f64> = ma.iter().map(|m| -m).collect();
    unconstrain_ar(&neg)
}

/// Pulls AR coefficients inside the stationary region by geometric
/// shrinkage; falls back to zeros.
pub(crate) fn shrink_to_stationary(ar: &[f64]) -> Vec<f64> {
    let mut c = ar.to_vec();
    for _ in 0..40 {
        if c.iter().all(|v| v.is_finite()) && is_stationary(&c) {
            return c;
        }
        c.iter_mut().for_each(|v| *v *= 0.8);
    }
    vec![0.0; ar.len()]
}
