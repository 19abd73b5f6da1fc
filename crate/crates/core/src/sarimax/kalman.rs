//! Kalman filter for a zero-mean ARMA process in Harvey's state-space form:
//!
//! ```text
//! alpha[t+1] = T alpha[t] + R e[t],   e[t] ~ N(0, sigma2)
//! w[t]       = alpha[t][0]
//! ```
//!
//! `T` is a companion matrix with the expanded AR coefficients in its first
//! column and ones on the super-diagonal; `R = [1, theta_1, ..., theta_{r-1}]`.
//! The filter starts from the unconditional distribution, whose covariance
//! solves the discrete Lyapunov equation `P = T P T' + sigma2 R R'`.
//!
//! All products with `T` exploit the companion structure, so one filter step
//! costs O(r^2).

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    pub(crate) fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    fn matmul(&self, other: &Square) -> Square {
        let n = self.n;
        let mut out = Square::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    fn transpose(&self) -> Square {
        let n = self.n;
        let mut out = Square::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct StateSpace {
    /// First column of `T`, zero-padded to the state dimension.
    phi: Vec<f64>,
    /// `R`, zero-padded to the state dimension.
    r: Vec<f64>,
    sigma2: f64,
}

impl StateSpace {
    /// `ar` and `ma` are the expanded (seasonal-multiplied) coefficients.
    pub(crate) fn new(ar: &[f64], ma: &[f64], sigma2: f64) -> Self {
        let dim = ar.len().max(ma.len() + 1).max(1);
        let mut phi = vec![0.0; dim];
        phi[..ar.len()].copy_from_slice(ar);
        let mut r = vec![0.0; dim];
        r[0] = 1.0;
        r[1..=ma.len()].copy_from_slice(ma);
        Self { phi, r, sigma2 }
    }

    pub(crate) fn dim(&self) -> usize {
        self.phi.len()
    }

    /// `T x`.
    pub(crate) fn transition(&self, x: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|i| self.phi[i] * x[0] + if i + 1 < dim { x[i + 1] } else { 0.0 })
            .collect()
    }

    /// `T P T'` for symmetric `P`.
    fn sandwich(&self, p: &Square) -> Square {
        let dim = self.dim();
        // M = T P
        let mut m = Square::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let below = if i + 1 < dim { p.get(i + 1, j) } else { 0.0 };
                m.set(i, j, self.phi[i] * p.get(0, j) + below);
            }
        }
        // M T'
        let mut out = Square::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let right = if j + 1 < dim { m.get(i, j + 1) } else { 0.0 };
                out.set(i, j, self.phi[j] * m.get(i, 0) + right);
            }
        }
        out
    }

    fn state_noise(&self) -> Square {
        let dim = self.dim();
        let mut q = Square::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                q.set(i, j, self.sigma2 * self.r[i] * self.r[j]);
            }
        }
        q
    }

    fn transition_matrix(&self) -> Square {
        let dim = self.dim();
        let mut t = Square::zeros(dim);
        for i in 0..dim {
            t.set(i, 0, self.phi[i]);
            if i + 1 < dim {
                t.set(i, i + 1, 1.0);
            }
        }
        t
    }

    /// Solves `P = T P T' + Q` by the doubling iteration
    /// `P <- P + A P A'`, `A <- A^2`, which sums `sum_k T^k Q T'^k`.
    pub(crate) fn stationary_covariance(&self) -> Result<Square> {
        let mut p = self.state_noise();
        if self.phi.iter().all(|&v| v == 0.0) {
            // pure MA: T is nilpotent, the sum is finite
            let mut term = p.clone();
            for _ in 1..self.dim() {
                term = self.sandwich(&term);
                for (a, b) in p.data.iter_mut().zip(&term.data) {
                    *a += b;
                }
            }
            return Ok(p);
        }
        let mut a = self.transition_matrix();
        for _ in 0..200 {
            let apa = a.matmul(&p).matmul(&a.transpose());
            for (x, y) in p.data.iter_mut().zip(&apa.data) {
                *x += y;
            }
            a = a.matmul(&a);
            let scale = a.max_abs();
            if !scale.is_finite() || scale > 1e100 {
                break;
            }
            if scale < 1e-18 {
                if p.data.iter().all(|v| v.is_finite()) {
                    return Ok(p);
                }
                break;
            }
        }
        Err(Error::Numerical(
            "Lyapunov iteration did not converge (non-stationary AR polynomial)".into(),
        ))
    }
}

/// Result of a full pass of the filter.
#[derive(Debug, Clone)]
pub(crate) struct FilterOutput {
    pub loglik: f64,
    /// One-step prediction errors `v_t`.
    pub innovations: Vec<f64>,
    /// Their variances `F_t`.
    pub variances: Vec<f64>,
    /// Predicted state and covariance for the step after the sample.
    pub next_state: Vec<f64>,
    pub next_cov: Square,
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub(crate) fn filter(ss: &StateSpace, data: &[f64], keep_path: bool) -> Result<FilterOutput> {
    let dim = ss.dim();
    let mut a = vec![0.0; dim];
    let mut p = ss.stationary_covariance()?;
    let q = ss.state_noise();
    let mut loglik = 0.0;
    let mut innovations = Vec::with_capacity(if keep_path { data.len() } else { 0 });
    let mut variances = Vec::with_capacity(if keep_path { data.len() } else { 0 });
    let scale = p.get(0, 0).abs().max(f64::MIN_POSITIVE);
    for &y in data {
        let v = y - a[0];
        let f = p.get(0, 0);
        if !(f > 1e-14 * scale) || !f.is_finite() {
            return Err(Error::Numerical(format!(
                "prediction variance {f:e} is not positive; filter covariance lost definiteness"
            )));
        }
        loglik -= 0.5 * (LN_2PI + f.ln() + v * v / f);
        if keep_path {
            innovations.push(v);
            variances.push(f);
        }
        // measurement update
        let k: Vec<f64> = (0..dim).map(|i| p.get(i, 0) / f).collect();
        for i in 0..dim {
            a[i] += k[i] * v;
        }
        let col: Vec<f64> = (0..dim).map(|i| p.get(i, 0)).collect();
        for i in 0..dim {
            for j in 0..dim {
                let val = p.get(i, j) - k[i] * col[j];
                p.set(i, j, val);
            }
        }
        // time update
        a = ss.transition(&a);
        p = ss.sandwich(&p);
        for (x, y) in p.data.iter_mut().zip(&q.data) {
            *x += y;
        }
        // symmetrise against round-off drift
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (p.get(i, j) + p.get(j, i));
                p.set(i, j, avg);
                p.set(j, i, avg);
            }
        }
    }
    Ok(FilterOutput {
        loglik,
        innovations,
        variances,
        next_state: a,
        next_cov: p,
    })
}

/// Means and joint covariance of `w[n+1..=n+h]` given the filtered state.
pub(crate) fn forecast_moments(ss: &StateSpace, state: &[f64], cov: &Square, horizon: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let dim = ss.dim();
    let q = ss.state_noise();
    let mut means = Vec::with_capacity(horizon);
    let mut a = state.to_vec();
    let mut p = cov.clone();
    // cross[i] = T^{j-i} P_i Z', advanced as j grows
    let mut cross: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    let mut covariance = vec![vec![0.0; horizon]; horizon];
    for j in 0..horizon {
        means.push(a[0]);
        cross.push((0..dim).map(|i| p.get(i, 0)).collect());
        for i in 0..=j {
            let c = cross[i][0];
            covariance[i][j] = c;
            covariance[j][i] = c;
        }
        for col in cross.iter_mut() {
            *col = ss.transition(col);
        }
        a = ss.transition(&a);
        p = ss.sandwich(&p);
        for (x, y) in p.data.iter_mut().zip(&q.data) {
            *x += y;
        }
    }
    (means, covariance)
}
