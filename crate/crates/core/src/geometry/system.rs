use crate::expr::{Compiled, Expr, Vars};
use crate::{error::check_dim, Result, Scalar};

use super::VectorField;

/// Driftless control-affine system `ẋ = u^a X_a(x)` with compiled fields
/// and their state Jacobians.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    state: Vars,
    fields: Vec<VectorField>,
    // [a][j]: X^j_a
    x: Vec<Vec<Compiled>>,
    // [a][j][i]: ∂X^j_a/∂x^i
    dx: Vec<Vec<Vec<Compiled>>>,
}

impl ControlSystem {
    pub fn new<S: AsRef<str>>(state: &[S], fields: Vec<VectorField>) -> Result<ControlSystem> {
        let vars = Vars::new(state);
        let n = vars.len();
        for f in &fields {
            check_dim("generator", n, f.dim())?;
        }
        let x = fields.iter().map(|f| f.compile(&vars)).collect::<Result<Vec<_>>>()?;
        let dx = fields
            .iter()
            .map(|f| {
                f.components()
                    .iter()
                    .map(|c| {
                        vars.names()
                            .map(|v| Ok(c.diff(v).compile(&vars)?))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ControlSystem {
            state: vars,
            fields,
            x,
            dx,
        })
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    pub fn generators(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn state(&self) -> &Vars {
        &self.state
    }

    /// `X^j_a(x)` as `[a][j]`.
    pub fn field_values<T: Scalar>(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        check_dim("state", self.dim(), x.len())?;
        self.x
            .iter()
            .map(|f| f.iter().map(|c| Ok(c.eval(x)?)).collect())
            .collect()
    }

    /// `ẋ^j = u^a X^j_a(x)`.
    pub fn velocity<T: Scalar>(&self, x: &[T], u: &[T], out: &mut [T]) -> Result<()> {
        check_dim("controls", self.generators(), u.len())?;
        check_dim("output", self.dim(), out.len())?;
        out.iter_mut().for_each(|o| *o = T::zero());
        for (a, f) in self.x.iter().enumerate() {
            if u[a] == T::zero() {
                continue;
            }
            for (j, c) in f.iter().enumerate() {
                out[j] += u[a] * c.eval(x)?;
            }
        }
        Ok(())
    }

    /// Linearization `A^j_i = ∂u^a/∂x^i X^j_a + u^a ∂X^j_a/∂x^i`, row-major
    /// `[j][i]`. `u_x` is the `k × n` control Jacobian in closed-loop mode.
    pub fn linearization<T: Scalar>(&self, x: &[T], u: &[T], u_x: Option<&[T]>) -> Result<Vec<T>> {
        let n = self.dim();
        let k = self.generators();
        check_dim("state", n, x.len())?;
        check_dim("controls", k, u.len())?;
        let mut a = vec![T::zero(); n * n];
        for g in 0..k {
            for j in 0..n {
                for i in 0..n {
                    a[j * n + i] += u[g] * self.dx[g][j][i].eval(x)?;
                }
            }
        }
        if let Some(ux) = u_x {
            check_dim("control Jacobian", k * n, ux.len())?;
            let xv = self.field_values(x)?;
            for g in 0..k {
                for j in 0..n {
                    for i in 0..n {
                        a[j * n + i] += ux[g * n + i] * xv[g][j];
                    }
                }
            }
        }
        Ok(a)
    }

    /// Infinitesimal deformation `ẏ = A y`.
    pub fn deformation_rhs<T: Scalar>(
        &self,
        x: &[T],
        y: &[T],
        u: &[T],
        u_x: Option<&[T]>,
        out: &mut [T],
    ) -> Result<()> {
        let n = self.dim();
        check_dim("deformation", n, y.len())?;
        check_dim("output", n, out.len())?;
        let a = self.linearization(x, u, u_x)?;
        for j in 0..n {
            out[j] = (0..n).map(|i| a[j * n + i] * y[i]).sum();
        }
        Ok(())
    }

    /// Adjoint `ṗ_k = −A^j_k p_j`.
    pub fn adjoint_rhs<T: Scalar>(
        &self,
        x: &[T],
        p: &[T],
        u: &[T],
        u_x: Option<&[T]>,
        out: &mut [T],
    ) -> Result<()> {
        let n = self.dim();
        check_dim("costate", n, p.len())?;
        check_dim("output", n, out.len())?;
        let a = self.linearization(x, u, u_x)?;
        for k in 0..n {
            out[k] = -(0..n).map(|j| a[j * n + k] * p[j]).sum::<T>();
        }
        Ok(())
    }

    /// Switching values `Q_a = p_i X^i_a(x)`.
    pub fn switching<T: Scalar>(&self, x: &[T], p: &[T]) -> Result<Vec<T>> {
        check_dim("costate", self.dim(), p.len())?;
        Ok(self
            .field_values(x)?
            .iter()
            .map(|f| f.iter().zip(p).map(|(a, b)| *a * *b).sum())
            .collect())
    }
}

/// State feedback `u^a = u^a(x)` with its symbolic Jacobian.
#[derive(Debug, Clone)]
pub struct Feedback {
    laws: Vec<Expr>,
    u: Vec<Compiled>,
    // [a][i]
    du: Vec<Vec<Compiled>>,
}

impl Feedback {
    pub fn new<S: AsRef<str>>(state: &[S], laws: Vec<Expr>) -> Result<Feedback> {
        let vars = Vars::new(state);
        let u = laws.iter().map(|l| Ok(l.compile(&vars)?)).collect::<Result<Vec<_>>>()?;
        let du = laws
            .iter()
            .map(|l| {
                vars.names()
                    .map(|v| Ok(l.diff(v).compile(&vars)?))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Feedback { laws, u, du })
    }

    pub fn laws(&self) -> &[Expr] {
        &self.laws
    }

    pub fn controls<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        self.u.iter().map(|c| Ok(c.eval(x)?)).collect()
    }

    /// Row-major `k × n` Jacobian `∂u^a/∂x^i`.
    pub fn jacobian<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.du.len() * x.len());
        for row in &self.du {
            for c in row {
                out.push(c.eval(x)?);
            }
        }
        Ok(out)
    }
}
