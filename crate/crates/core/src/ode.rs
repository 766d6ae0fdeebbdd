//! Fixed-step classical Runge–Kutta integration.

use crate::{Result, Scalar};

/// Reusable stage buffers for [`rk4_step`].
#[derive(Debug, Clone)]
pub struct Rk4Work<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Scalar> Rk4Work<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![T::zero(); dim];
        Rk4Work {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

/// One RK4 step of `y' = f(t, y)` in place. The right-hand side writes into
/// its last argument.
pub fn rk4_step<T, F>(f: &mut F, t: T, y: &mut [T], h: T, w: &mut Rk4Work<T>) -> Result<()>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
{
    let n = y.len();
    let half = h / T::lit(2.0);
    f(t, y, &mut w.k1)?;
    for i in 0..n {
        w.tmp[i] = y[i] + half * w.k1[i];
    }
    f(t + half, &w.tmp, &mut w.k2)?;
    for i in 0..n {
        w.tmp[i] = y[i] + half * w.k2[i];
    }
    f(t + half, &w.tmp, &mut w.k3)?;
    for i in 0..n {
        w.tmp[i] = y[i] + h * w.k3[i];
    }
    f(t + h, &w.tmp, &mut w.k4)?;
    let sixth = h / T::lit(6.0);
    for i in 0..n {
        y[i] += sixth * (w.k1[i] + T::lit(2.0) * (w.k2[i] + w.k3[i]) + w.k4[i]);
    }
    Ok(())
}

/// Integrates over the nodes of `grid` (any monotone sequence), returning
/// the state at every node.
pub fn rk4_grid<T, F>(mut f: F, grid: &[T], y0: &[T]) -> Result<Vec<Vec<T>>>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
{
    let mut w = Rk4Work::new(y0.len());
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y.clone());
    for k in 1..grid.len() {
        rk4_step(&mut f, grid[k - 1], &mut y, grid[k] - grid[k - 1], &mut w)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(crate::Error::NonFinite(format!(
                "state at t = {}",
                grid[k]
            )));
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Final state only, `steps` uniform steps from `t0` to `t1`.
pub fn rk4_final<T, F>(mut f: F, t0: T, t1: T, y0: &[T], steps: usize) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
{
    let steps = steps.max(1);
    let h = (t1 - t0) / T::lit(steps as f64);
    let mut w = Rk4Work::new(y0.len());
    let mut y = y0.to_vec();
    for k in 0..steps {
        let t = t0 + h * T::lit(k as f64);
        rk4_step(&mut f, t, &mut y, h, &mut w)?;
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(crate::Error::NonFinite(format!("state at t = {t1}")));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::linspace;

    #[test]
    fn exponential_fourth_order() {
        let err = |steps: usize| {
            let y = rk4_final(
                |_t, y: &[f64], d: &mut [f64]| {
                    d[0] = y[0];
                    Ok(())
                },
                0.0,
                1.0,
                &[1.0],
                steps,
            )
            .unwrap();
            (y[0] - 1f64.exp()).abs()
        };
        let order = (err(10) / err(20)).log2();
        assert!((order - 4.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn grid_matches_final() {
        let f = |t: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0] + t.sin();
            Ok(())
        };
        let grid = linspace(0.0f64, 2.0, 200);
        let all = rk4_grid(f, &grid, &[1.0, 0.0]).unwrap();
        let last = rk4_final(f, 0.0, 2.0, &[1.0, 0.0], 200).unwrap();
        assert!((all[200][0] - last[0]).abs() < 1e-14);
        let single = rk4_final(
            |_t, y: &[f32], d: &mut [f32]| {
                d[0] = -y[0];
                Ok(())
            },
            0.0f32,
            1.0,
            &[1.0],
            100,
        )
        .unwrap();
        assert!((single[0] - (-1f32).exp()).abs() < 1e-6);
    }
}
