//! Derivative-free wrappers around quasi-Newton and simplex minimisation.
//! Objective failures are reported as `f64::INFINITY` and treated as
//! "step too far" by the line search.

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsSettings {
    pub max_iter: usize,
    pub gtol: f64,
    pub ftol: f64,
}

impl Default for BfgsSettings {
    fn default() -> Self {
        Self {
            max_iter: 500,
            gtol: 1e-6,
            ftol: 1e-13,
        }
    }
}

pub(crate) fn numerical_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 6e-6 * x[i].abs().max(1.0);
            let orig = xp[i];
            xp[i] = orig + h;
            let up = f(&xp);
            xp[i] = orig - h;
            let down = f(&xp);
            xp[i] = orig;
            if up.is_finite() && down.is_finite() {
                (up - down) / (2.0 * h)
            } else {
                // one-sided at the edge of the feasible region
                let f0 = f(x);
                if up.is_finite() {
                    (up - f0) / h
                } else if down.is_finite() {
                    (f0 - down) / h
                } else {
                    0.0
                }
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], settings: BfgsSettings) -> Minimum {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if n == 0 {
        return Minimum {
            x,
            f: fx,
            iterations: 0,
            converged: fx.is_finite(),
        };
    }
    if !fx.is_finite() {
        return Minimum {
            x,
            f: fx,
            iterations: 0,
            converged: false,
        };
    }
    let identity = |scale: f64| {
        let mut h = vec![vec![0.0; n]; n];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = scale;
        }
        h
    };
    let mut h = identity(1.0);
    let mut g = numerical_gradient(f, &x);
    let mut small_steps = 0;
    let mut fresh = true;
    for iter in 0..settings.max_iter {
        if inf_norm(&g) < settings.gtol {
            return Minimum {
                x,
                f: fx,
                iterations: iter,
                converged: true,
            };
        }
        let mut p: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        if dot(&p, &g) >= 0.0 {
            h = identity(1.0);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
        }
        let pmax = inf_norm(&p);
        if pmax > 5.0 {
            p.iter_mut().for_each(|v| *v *= 5.0 / pmax);
        }
        let slope = dot(&p, &g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + step * b).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh {
                return Minimum {
                    x,
                    f: fx,
                    iterations: iter,
                    converged: inf_norm(&g) < 1e3 * settings.gtol,
                };
            }
            h = identity(1.0);
            fresh = true;
            continue;
        };
        let g_new = numerical_gradient(f, &x_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let df = fx - f_new;
        x = x_new;
        g = g_new;
        fx = f_new;
        if df.abs() <= settings.ftol * (1.0 + fx.abs()) {
            small_steps += 1;
            if small_steps >= 3 {
                return Minimum {
                    x,
                    f: fx,
                    iterations: iter + 1,
                    converged: inf_norm(&g) < 1e3 * settings.gtol,
                };
            }
        } else {
            small_steps = 0;
        }
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                h = identity(sy / dot(&y, &y));
                fresh = false;
            }
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            let rho = 1.0 / sy;
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
    Minimum {
        x,
        f: fx,
        iterations: settings.max_iter,
        converged: false,
    }
}

/// Nelder-Mead with standard coefficients.
pub(crate) fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, max_evals: usize) -> Minimum {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = f(x0);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1.0 { step * v[i].abs() } else { step };
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let mut evals = n + 1;
    let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    while evals < max_evals {
        simplex.sort_by(|a, b| key(a.1).total_cmp(&key(b.1)));
        let best = key(simplex[0].1);
        let worst = key(simplex[n].1);
        if (worst - best).abs() <= 1e-12 * (1.0 + best.abs()) && best.is_finite() {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
            .collect();
        let towards = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = towards(-1.0);
        let fr = key(f(&xr));
        evals += 1;
        if fr < best {
            let xe = towards(-2.0);
            let fe = key(f(&xe));
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < key(simplex[n - 1].1) {
            simplex[n] = (xr, fr);
        } else {
            let xc = if fr < worst { towards(-0.5) } else { towards(0.5) };
            let fc = key(f(&xc));
            evals += 1;
            if fc < worst.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (v, fv) in simplex.iter_mut().skip(1) {
                    for (a, b) in v.iter_mut().zip(&x_best) {
                        *a = b + 0.5 * (*a - b);
                    }
                    *fv = key(f(v));
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| key(a.1).total_cmp(&key(b.1)));
    let (x, fx) = simplex.swap_remove(0);
    Minimum {
        x,
        f: fx,
        iterations: evals,
        converged: evals < max_evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn bfgs_solves_rosenbrock() {
        let m = bfgs(&rosenbrock, &[-1.2, 1.0], BfgsSettings::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{m:?}");
    }

    #[test]
    fn bfgs_respects_infeasible_region() {
        // log barrier: infinite for x <= 0, minimum at x = 1
        let f = |x: &[f64]| if x[0] <= 0.0 { f64::INFINITY } else { x[0] - x[0].ln() };
        let m = bfgs(&f, &[5.0], BfgsSettings::default());
        assert!((m.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn nelder_mead_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
        let m = nelder_mead(&f, &[0.0, 0.0], 0.5, 2000);
        assert!((m.x[0] - 3.0).abs() < 1e-4 && (m.x[1] + 1.0).abs() < 1e-4);
    }
}
