//! Bounded Levenberg-Marquardt on a residual function.

use nalgebra::{DMatrix, DVector};

/// Relative objective decrease below which an accepted step ends the fit.
pub const REL_DECREASE_TOL: f64 = 1e-10;
/// Scaled step norm below which the fit ends.
pub const STEP_TOL: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e16;

pub struct Bounds<'a> {
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl Bounds<'_> {
    fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(self.lower).zip(self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub residuals: Vec<f64>,
    /// Jacobian of the residuals at `x`, in physical units.
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Finite-difference step for a parameter value.
pub fn fd_step(v: f64) -> f64 {
    (1e-6 * v.abs()).max(1e-12)
}

/// Central-difference Jacobian, one-sided next to a bound.
pub fn jacobian<F, E>(
    f: &F,
    x: &[f64],
    r0: &[f64],
    bounds: &Bounds,
    evals: &mut usize,
) -> Result<DMatrix<f64>, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    let mut jac = DMatrix::zeros(r0.len(), x.len());
    for j in 0..x.len() {
        let h = fd_step(x[j]);
        let up_ok = x[j] + h <= bounds.upper[j];
        let down_ok = x[j] - h >= bounds.lower[j];
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        let (rp, rm, denom) = match (up_ok, down_ok) {
            (true, true) => {
                xp[j] += h;
                xm[j] -= h;
                *evals += 2;
                (f(&xp)?, f(&xm)?, 2.0 * h)
            }
            (true, false) => {
                xp[j] += h;
                *evals += 1;
                (f(&xp)?, r0.to_vec(), h)
            }
            _ => {
                xm[j] -= h;
                *evals += 1;
                (r0.to_vec(), f(&xm)?, h)
            }
        };
        for i in 0..r0.len() {
            jac[(i, j)] = (rp[i] - rm[i]) / denom;
        }
    }
    Ok(jac)
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimizes `sum f(x)_i^2` from `x0` within `bounds`.
///
/// Steps are taken in parameters scaled by `max(|x0|, 1e-12)` and
/// projected onto the bounds.
pub fn minimize<F, E>(
    f: &F,
    x0: &[f64],
    bounds: &Bounds,
    max_iterations: usize,
) -> Result<LmOutcome, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    let n = x0.len();
    let scales: Vec<f64> = x0.iter().map(|v| v.abs().max(1e-12)).collect();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut evals = 1;
    let mut r = f(&x)?;
    let mut obj = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    if n == 0 {
        let jacobian = DMatrix::zeros(r.len(), 0);
        return Ok(LmOutcome {
            x,
            objective: obj,
            residuals: r,
            jacobian,
            iterations,
            evaluations: evals,
            converged: true,
        });
    }

    let mut jac = jacobian(f, &x, &r, bounds, &mut evals)?;
    while iterations < max_iterations {
        iterations += 1;
        if obj == 0.0 {
            converged = true;
            break;
        }
        let mut js = jac.clone();
        for (j, s) in scales.iter().enumerate() {
            js.column_mut(j).scale_mut(*s);
        }
        let jtj = js.transpose() * &js;
        let g = js.transpose() * DVector::from_column_slice(&r);
        let diag: Vec<f64> = (0..n).map(|j| jtj[(j, j)].max(1e-30)).collect();

        let mut accepted = false;
        while lambda <= LAMBDA_MAX {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += lambda * diag[j];
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = (0..n).map(|j| x[j] + scales[j] * step[j]).collect();
            bounds.clamp(&mut trial);
            let step_norm = (0..n)
                .map(|j| ((trial[j] - x[j]) / scales[j]).powi(2))
                .sum::<f64>()
                .sqrt();
            if step_norm < STEP_TOL {
                converged = true;
                break;
            }
            evals += 1;
            let rt = f(&trial)?;
            let ot = sum_sq(&rt);
            if ot < obj {
                let rel = (obj - ot) / obj;
                x = trial;
                r = rt;
                obj = ot;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if rel < REL_DECREASE_TOL {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if accepted {
            jac = jacobian(f, &x, &r, bounds, &mut evals)?;
        }
        if converged {
            break;
        }
        if !accepted {
            // no downhill step at any damping: numerically stationary
            converged = true;
            break;
        }
    }

    Ok(LmOutcome {
        x,
        objective: obj,
        residuals: r,
        jacobian: jac,
        iterations,
        evaluations: evals,
        converged,
    })
}

/// `(J^T J)^-1` scaled by `chi2_red`, or `None` if `J^T J` is singular.
pub fn covariance(jac: &DMatrix<f64>, chi2_red: f64) -> Option<DMatrix<f64>> {
    let n = jac.ncols();
    if n == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    // column-equilibrate before inverting; parameter scales differ wildly
    let norms: Vec<f64> = (0..n).map(|j| jac.column(j).norm()).collect();
    if norms.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return None;
    }
    let mut js = jac.clone();
    for (j, s) in norms.iter().enumerate() {
        js.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = js.clone().svd(false, false);
    let sv = svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if smin <= 1e-10 * smax {
        return None;
    }
    let inv = (js.transpose() * js).try_inverse()?;
    let mut cov = inv * chi2_red;
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] /= norms[i] * norms[j];
        }
    }
    Some(cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    type R = Result<Vec<f64>, ()>;

    #[test]
    fn linear_least_squares() {
        // y = 2 x + 1 with exact data
        let xs = [0.0, 1.0, 2.0, 3.0];
        let f = |p: &[f64]| -> R {
            Ok(xs
                .iter()
                .map(|x| 2.0 * x + 1.0 - (p[0] * x + p[1]))
                .collect())
        };
        let b = Bounds {
            lower: &[-10.0, -10.0],
            upper: &[10.0, 10.0],
        };
        let out = minimize(&f, &[0.5, 0.5], &b, 100).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 2.0).abs() < 1e-9 && (out.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rosenbrock() {
        let f = |p: &[f64]| -> R { Ok(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]) };
        let b = Bounds {
            lower: &[-5.0, -5.0],
            upper: &[5.0, 5.0],
        };
        let out = minimize(&f, &[-1.2, 1.0], &b, 500).unwrap();
        assert!(
            (out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            out.x
        );
    }

    #[test]
    fn bounds_are_honoured() {
        let f = |p: &[f64]| -> R { Ok(vec![p[0] - 3.0]) };
        let b = Bounds {
            lower: &[-1.0],
            upper: &[2.0],
        };
        let out = minimize(&f, &[0.0], &b, 100).unwrap();
        assert!((out.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_of_line_fit() {
        // oracle: for y = a x + b with unit sigmas, var(a) = n / (n Sxx - Sx^2)
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let mut jac = DMatrix::zeros(5, 2);
        for (i, x) in xs.iter().enumerate() {
            jac[(i, 0)] = -x;
            jac[(i, 1)] = -1.0;
        }
        let cov = covariance(&jac, 1.0).unwrap();
        let n = 5.0;
        let sx: f64 = xs.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        assert!((cov[(0, 0)] - n / (n * sxx - sx * sx)).abs() < 1e-12);
        assert!((cov[(1, 1)] - sxx / (n * sxx - sx * sx)).abs() < 1e-12);
    }

    #[test]
    fn singular_covariance() {
        let mut jac = DMatrix::zeros(3, 2);
        for i in 0..3 {
            jac[(i, 0)] = i as f64 + 1.0;
            jac[(i, 1)] = 2.0 * (i as f64 + 1.0);
        }
        assert!(covariance(&jac, 1.0).is_none());
    }
}
