//! Newton iteration with finite-difference Jacobians and a
//! Levenberg–Marquardt fallback.

use crate::linalg::{lm_step, Lu};
use crate::num::{norm2, norm_inf};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence threshold on the infinity norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative forward-difference step.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    /// Best iterate found.
    pub z: Vec<f64>,
    pub residual: Vec<f64>,
    /// Infinity norm of `residual`.
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Pivot-ratio condition estimate of the last Jacobian (infinite when
    /// it was singular or non-square).
    pub condition: f64,
}

/// Forward-difference Jacobian, row-major `m × n`.
pub fn fd_jacobian<F>(f: &mut F, z: &[f64], r: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let (m, n) = (r.len(), z.len());
    let mut j = vec![0.0; m * n];
    let mut zp = z.to_vec();
    for c in 0..n {
        let h = step * z[c].abs().max(1.0);
        zp[c] = z[c] + h;
        let rp = f(&zp)?;
        zp[c] = z[c];
        for i in 0..m {
            j[i * n + c] = (rp[i] - r[i]) / h;
        }
    }
    Ok(j)
}

/// Drives `f(z) → 0`. Errors from `f` at trial points count as rejected
/// steps; an error at `z0` is returned.
pub fn newton<F>(mut f: F, z0: &[f64], opts: &NewtonOptions) -> Result<NewtonOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut z = z0.to_vec();
    let mut r = f(&z)?;
    let n = z.len();
    let mut condition = f64::INFINITY;
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let accept = |r_new: &Result<Vec<f64>>, r: &[f64]| match r_new {
        Ok(v) => v.iter().all(|x| x.is_finite()) && norm2(v) < norm2(r),
        Err(_) => false,
    };
    while norm_inf(&r) >= opts.tol && iterations < opts.max_iter && n > 0 {
        iterations += 1;
        let j = fd_jacobian(&mut f, &z, &r, opts.fd_step)?;
        let mut stepped = false;
        if r.len() == n {
            if let Ok(lu) = Lu::factor(&j, n) {
                condition = lu.condition_estimate();
                let neg: Vec<f64> = r.iter().map(|v| -v).collect();
                let d = lu.solve(&neg);
                let mut alpha = 1.0;
                for _ in 0..10 {
                    let trial: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                    let rt = f(&trial);
                    if accept(&rt, &r) {
                        z = trial;
                        r = rt?;
                        stepped = true;
                        break;
                    }
                    alpha *= 0.5;
                }
            } else {
                condition = f64::INFINITY;
            }
        }
        if !stepped {
            for _ in 0..14 {
                if let Ok(d) = lm_step(&j, &r, n, lambda) {
                    let trial: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + b).collect();
                    let rt = f(&trial);
                    if accept(&rt, &r) {
                        z = trial;
                        r = rt?;
                        lambda = (lambda / 10.0).max(1e-12);
                        stepped = true;
                        break;
                    }
                }
                lambda *= 10.0;
            }
        }
        if !stepped {
            break;
        }
    }
    let norm = norm_inf(&r);
    Ok(NewtonOutcome {
        converged: norm < opts.tol,
        z,
        residual: r,
        norm,
        iterations,
        condition,
    })
}
