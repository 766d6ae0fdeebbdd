//! Finite-difference derivatives of sampled data on uniform grids.

use crate::Scalar;

/// Fourth-order derivative of samples spaced by `h`; one-sided stencils
/// at the two nodes nearest each end. Falls back to [`deriv2`] below five
/// samples.
pub fn deriv4<T: Scalar>(v: &[T], h: T) -> Vec<T> {
    let n = v.len();
    if n < 5 {
        return deriv2(v, h);
    }
    let c = |x: f64| T::lit(x);
    let d = T::lit(12.0) * h;
    (0..n)
        .map(|i| {
            if i == 0 {
                (c(-25.0) * v[0] + c(48.0) * v[1] - c(36.0) * v[2] + c(16.0) * v[3] - c(3.0) * v[4]) / d
            } else if i == 1 {
                (c(-3.0) * v[0] - c(10.0) * v[1] + c(18.0) * v[2] - c(6.0) * v[3] + v[4]) / d
            } else if i == n - 2 {
                -(c(-3.0) * v[n - 1] - c(10.0) * v[n - 2] + c(18.0) * v[n - 3] - c(6.0) * v[n - 4] + v[n - 5]) / d
            } else if i == n - 1 {
                -(c(-25.0) * v[n - 1] + c(48.0) * v[n - 2] - c(36.0) * v[n - 3] + c(16.0) * v[n - 4]
                    - c(3.0) * v[n - 5])
                    / d
            } else {
                (-v[i + 2] + c(8.0) * v[i + 1] - c(8.0) * v[i - 1] + v[i - 2]) / d
            }
        })
        .collect()
}

/// Second-order derivative: central interior, one-sided three-point ends.
pub fn deriv2<T: Scalar>(v: &[T], h: T) -> Vec<T> {
    let n = v.len();
    let two = T::lit(2.0);
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        2 => {
            let d = (v[1] - v[0]) / h;
            vec![d, d]
        }
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    (T::lit(-3.0) * v[0] + T::lit(4.0) * v[1] - v[2]) / (two * h)
                } else if i == n - 1 {
                    (T::lit(3.0) * v[n - 1] - T::lit(4.0) * v[n - 2] + v[n - 3]) / (two * h)
                } else {
                    (v[i + 1] - v[i - 1]) / (two * h)
                }
            })
            .collect(),
    }
}

/// Second-order derivative on a nonuniform monotone grid.
pub fn deriv2_nonuniform<T: Scalar>(t: &[T], v: &[T]) -> Vec<T> {
    let n = v.len();
    if n < 3 {
        let d = if n == 2 { (v[1] - v[0]) / (t[1] - t[0]) } else { T::zero() };
        return vec![d; n];
    }
    // Derivative of the quadratic through three nodes, evaluated at node `at`.
    let quad = |i: usize, at: T| {
        let (t0, t1, t2) = (t[i], t[i + 1], t[i + 2]);
        let l0 = (T::lit(2.0) * at - t1 - t2) / ((t0 - t1) * (t0 - t2));
        let l1 = (T::lit(2.0) * at - t0 - t2) / ((t1 - t0) * (t1 - t2));
        let l2 = (T::lit(2.0) * at - t0 - t1) / ((t2 - t0) * (t2 - t1));
        l0 * v[i] + l1 * v[i + 1] + l2 * v[i + 2]
    };
    (0..n)
        .map(|i| match i {
            0 => quad(0, t[0]),
            _ if i == n - 1 => quad(n - 3, t[n - 1]),
            _ => quad(i - 1, t[i]),
        })
        .collect()
}

/// Whether the grid is uniform to relative tolerance `1e-9`.
pub fn is_uniform<T: Scalar>(t: &[T]) -> bool {
    if t.len() < 3 {
        return true;
    }
    let h = (t[t.len() - 1] - t[0]) / T::lit((t.len() - 1) as f64);
    t.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= T::lit(1e-9) * h.abs())
}

/// Derivative of samples on any grid: fourth order when uniform.
pub fn derivative<T: Scalar>(t: &[T], v: &[T]) -> Vec<T> {
    if is_uniform(t) && t.len() >= 2 {
        let h = (t[t.len() - 1] - t[0]) / T::lit((t.len() - 1) as f64);
        deriv4(v, h)
    } else {
        deriv2_nonuniform(t, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::linspace;

    #[test]
    fn quartic_is_exact_for_fourth_order() {
        let t = linspace(0.0f64, 1.0, 20);
        let v: Vec<f64> = t.iter().map(|s| s.powi(4) - s).collect();
        let d = deriv4(&v, 0.05);
        for (s, dv) in t.iter().zip(&d) {
            assert!((dv - (4.0 * s.powi(3) - 1.0)).abs() < 1e-10, "{s}");
        }
    }

    #[test]
    fn orders() {
        let err = |n: usize, fourth: bool| {
            let t = linspace(0.0f64, 1.0, n);
            let h = 1.0 / n as f64;
            let v: Vec<f64> = t.iter().map(|s| s.sin()).collect();
            let d = if fourth { deriv4(&v, h) } else { deriv2(&v, h) };
            t.iter().zip(&d).map(|(s, dv)| (dv - s.cos()).abs()).fold(0.0, f64::max)
        };
        assert!((err(20, true) / err(40, true)).log2() > 3.7);
        assert!((err(20, false) / err(40, false)).log2() > 1.8);
    }

    #[test]
    fn nonuniform_quadratic_exact() {
        let t = [0.0, 0.1, 0.35, 0.5, 0.9];
        let v: Vec<f64> = t.iter().map(|s| 3.0 * s * s - s).collect();
        assert!(!is_uniform(&t));
        for (s, d) in t.iter().zip(derivative(&t, &v)) {
            assert!((d - (6.0 * s - 1.0)).abs() < 1e-12);
        }
    }
}
