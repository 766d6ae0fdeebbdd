//! Small dense linear algebra: LU with partial pivoting, Levenberg–Marquardt
//! steps, Cholesky test. Matrices are row-major slices.

use crate::{Error, Result, Scalar};

/// LU factorization `PA = LU` of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &[T], n: usize) -> Result<Lu<T>> {
        crate::error::check_dim("LU factorization", n * n, a.len())?;
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, big) = (k..n)
                .map(|r| (r, lu[r * n + k].abs()))
                .fold((k, -T::one()), |m, c| if c.1 > m.1 { c } else { m });
            if big == T::zero() || !big.is_finite() {
                return Err(Error::Singular {
                    what: "matrix",
                    condition: f64::INFINITY,
                });
            }
            if piv != k {
                for c in 0..n {
                    lu.swap(k * n + c, piv * n + c);
                }
                perm.swap(k, piv);
            }
            let d = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / d;
                lu[r * n + k] = f;
                for c in k + 1..n {
                    let v = lu[k * n + c];
                    lu[r * n + c] -= f * v;
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    /// Ratio of largest to smallest pivot magnitude; a cheap lower bound
    /// proxy for the 2-norm condition number.
    pub fn condition_estimate(&self) -> T {
        let n = self.n;
        let piv = (0..n).map(|k| self.lu[k * n + k].abs());
        let (lo, hi) = piv.fold((T::infinity(), T::zero()), |(lo, hi), p| (lo.min(p), hi.max(p)));
        if n == 0 {
            T::one()
        } else {
            hi / lo
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&i| b[i]).collect();
        for r in 0..n {
            for c in 0..r {
                let v = self.lu[r * n + c] * x[c];
                x[r] -= v;
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                let v = self.lu[r * n + c] * x[c];
                x[r] -= v;
            }
            x[r] /= self.lu[r * n + r];
        }
        x
    }
}

/// Solves the square system `a x = b`.
pub fn solve<T: Scalar>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    Lu::factor(a, b.len()).map(|lu| lu.solve(b))
}

/// Damped Gauss–Newton step for an `m × n` Jacobian: solves
/// `(JᵀJ + λ·diag(JᵀJ + 1)) δ = −Jᵀr`.
pub fn lm_step<T: Scalar>(j: &[T], r: &[T], n: usize, lambda: T) -> Result<Vec<T>> {
    let m = r.len();
    crate::error::check_dim("Jacobian", m * n, j.len())?;
    let mut a = vec![T::zero(); n * n];
    let mut g = vec![T::zero(); n];
    for i in 0..m {
        for p in 0..n {
            let jp = j[i * n + p];
            g[p] -= jp * r[i];
            for q in 0..n {
                a[p * n + q] += jp * j[i * n + q];
            }
        }
    }
    for p in 0..n {
        let d = a[p * n + p];
        a[p * n + p] = d + lambda * (d + T::one());
    }
    solve(&a, &g)
}

/// `y = A x` for row-major `A` with `x.len()` columns.
pub fn matvec<T: Scalar>(a: &[T], x: &[T]) -> Vec<T> {
    a.chunks(x.len().max(1))
        .map(|row| row.iter().zip(x).map(|(p, q)| *p * *q).sum())
        .collect()
}

/// Whether a symmetric matrix is positive definite (Cholesky succeeds).
pub fn is_positive_definite<T: Scalar>(a: &[T], n: usize) -> bool {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s.is_nan() || s <= T::zero() {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pivoting_needed() {
        let a = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(solve(&a, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
        assert!(matches!(
            solve(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn condition_grows_with_near_singularity() {
        let lu = Lu::factor(&[1.0, 0.0, 0.0, 1e-9], 2).unwrap();
        assert!(lu.condition_estimate() > 1e8);
    }

    #[test]
    fn cholesky() {
        assert!(is_positive_definite(&[2.0, 1.0, 1.0, 2.0], 2));
        assert!(!is_positive_definite(&[1.0, 2.0, 2.0, 1.0], 2));
    }

    #[test]
    fn lm_with_small_damping_is_least_squares() {
        // Overdetermined fit of y = a + b s through three points.
        let j = [1.0, 0.0, 1.0, 1.0, 1.0, 2.0];
        let r = [-1.0, -3.0, -5.0];
        let d: Vec<f64> = lm_step(&j, &r, 2, 0.0).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12 && (d[1] - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn solve_residual_small(vals in proptest::collection::vec(-1.0f64..1.0, 9), b in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let mut a = vals.clone();
            for i in 0..3 { a[i * 3 + i] += 4.0; }
            let x = solve(&a, &b).unwrap();
            let ax = matvec(&a, &x);
            for i in 0..3 { prop_assert!((ax[i] - b[i]).abs() < 1e-12); }
        }
    }
}
