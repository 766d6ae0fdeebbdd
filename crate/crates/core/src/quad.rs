//! Composite Simpson quadrature.

use crate::Scalar;

/// Integrates `f` over `[a, b]` with `panels` Simpson panels (rounded up to
/// an even number of subintervals).
pub fn simpson<T: Scalar, F: FnMut(T) -> T>(mut f: F, a: T, b: T, panels: usize) -> T {
    let n = panels.max(1).div_ceil(2) * 2;
    let h = (b - a) / T::lit(n as f64);
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        s += w * f(a + h * T::lit(k as f64));
    }
    s * h / T::lit(3.0)
}

/// Simpson's rule over uniformly spaced samples. An odd number of
/// intervals gets a trapezoid on the final one.
pub fn simpson_samples<T: Scalar>(v: &[T], h: T) -> T {
    let n = v.len();
    if n < 2 {
        return T::zero();
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut s = T::zero();
    if even > 0 {
        s = v[0] + v[even];
        for k in 1..even {
            let w = if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
            s += w * v[k];
        }
        s = s * h / T::lit(3.0);
    }
    if even < intervals {
        s += (v[n - 2] + v[n - 1]) * h / T::lit(2.0);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_exact() {
        let v = simpson(|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 2);
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn samples_match() {
        let h = 0.01;
        let v: Vec<f64> = (0..=100).map(|k| (k as f64 * h).exp()).collect();
        assert!((simpson_samples(&v, h) - (1f64.exp() - 1.0)).abs() < 1e-9);
    }
}
