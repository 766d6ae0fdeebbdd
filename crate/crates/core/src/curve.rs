//! Parametrized curves: symbolic `x^i(τ)` or sampled polylines.

use crate::expr::{parse, Compiled, Expr, Vars};
use crate::fd;
use crate::quad::{simpson, simpson_samples};
use crate::{Error, Result};

#[derive(Debug, Clone)]
enum Repr {
    Symbolic {
        comps: Vec<Expr>,
        pos: Vec<Compiled>,
        vel: Vec<Compiled>,
    },
    Sampled {
        t: Vec<f64>,
        x: Vec<Vec<f64>>,
        xdot: Vec<Vec<f64>>,
    },
}

/// A C¹ curve on `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct Curve {
    repr: Repr,
    t0: f64,
    t1: f64,
}

impl Curve {
    /// Components given as expressions of the single parameter `param`.
    pub fn symbolic(comps: Vec<Expr>, param: &str, t0: f64, t1: f64) -> Result<Curve> {
        if !(t0.is_finite() && t1.is_finite() && t0 <= t1) {
            return Err(Error::Invalid(format!("bad curve interval [{t0}, {t1}]")));
        }
        let vars = Vars::new(&[param]);
        let pos = comps.iter().map(|c| Ok(c.compile(&vars)?)).collect::<Result<_>>()?;
        let vel = comps.iter().map(|c| Ok(c.diff(param).compile(&vars)?)).collect::<Result<_>>()?;
        Ok(Curve {
            repr: Repr::Symbolic { comps, pos, vel },
            t0,
            t1,
        })
    }

    pub fn parse(texts: &[&str], param: &str, t0: f64, t1: f64) -> Result<Curve> {
        let comps = texts.iter().map(|s| Ok(parse(s, &[param])?)).collect::<Result<_>>()?;
        Curve::symbolic(comps, param, t0, t1)
    }

    /// Segment from `a` to `b` over `τ ∈ [0, 1]`.
    pub fn straight(a: &[f64], b: &[f64]) -> Result<Curve> {
        crate::error::check_dim("segment endpoint", a.len(), b.len())?;
        let tau = Expr::var("tau");
        let comps = a
            .iter()
            .zip(b)
            .map(|(&p, &q)| (Expr::c(p) + Expr::c(q - p) * tau.clone()).simplify())
            .collect();
        Curve::symbolic(comps, "tau", 0.0, 1.0)
    }

    /// Polyline through strictly increasing parameter values, at least 3
    /// nodes; velocities by finite differences.
    pub fn sampled(t: Vec<f64>, x: Vec<Vec<f64>>) -> Result<Curve> {
        if t.len() < 3 || t.len() != x.len() {
            return Err(Error::Invalid("sampled curve needs at least 3 nodes with matching rows".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("curve parameter is not strictly increasing".into()));
        }
        let n = x[0].len();
        if x.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("curve rows have different widths".into()));
        }
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|i| fd::derivative(&t, &x.iter().map(|r| r[i]).collect::<Vec<_>>()))
            .collect();
        let xdot = (0..t.len()).map(|k| cols.iter().map(|c| c[k]).collect()).collect();
        let (t0, t1) = (t[0], t[t.len() - 1]);
        Ok(Curve {
            repr: Repr::Sampled { t, x, xdot },
            t0,
            t1,
        })
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Symbolic { comps, .. } => comps.len(),
            Repr::Sampled { x, .. } => x[0].len(),
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn components(&self) -> Option<&[Expr]> {
        match &self.repr {
            Repr::Symbolic { comps, .. } => Some(comps),
            Repr::Sampled { .. } => None,
        }
    }

    /// Position and velocity at `τ` (symbolic curves only).
    pub fn eval(&self, tau: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.repr {
            Repr::Symbolic { pos, vel, .. } => {
                let z = [tau];
                let p = pos.iter().map(|c| Ok(c.eval(&z)?)).collect::<Result<_>>()?;
                let v = vel.iter().map(|c| Ok(c.eval(&z)?)).collect::<Result<_>>()?;
                Ok((p, v))
            }
            Repr::Sampled { .. } => Err(Error::Unsupported("pointwise evaluation of a sampled curve".into())),
        }
    }

    /// Parameter values, positions and velocities: the stored nodes of a
    /// sampled curve, or `steps + 1` uniform nodes of a symbolic one.
    pub fn samples(&self, steps: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        match &self.repr {
            Repr::Sampled { t, x, xdot } => Ok((t.clone(), x.clone(), xdot.clone())),
            Repr::Symbolic { .. } => {
                let t = crate::num::linspace(self.t0, self.t1, steps.max(1));
                let mut xs = Vec::with_capacity(t.len());
                let mut vs = Vec::with_capacity(t.len());
                for &s in &t {
                    let (p, v) = self.eval(s)?;
                    xs.push(p);
                    vs.push(v);
                }
                Ok((t, xs, vs))
            }
        }
    }

    /// `∫ f(x(τ), ẋ(τ)) dτ`: composite Simpson with `panels` panels for
    /// symbolic curves, Simpson on the nodes for sampled ones.
    pub fn integrate<F>(&self, panels: usize, mut f: F) -> Result<f64>
    where
        F: FnMut(&[f64], &[f64]) -> Result<f64>,
    {
        if self.t1 == self.t0 {
            return Ok(0.0);
        }
        match &self.repr {
            Repr::Symbolic { .. } => {
                let mut err = None;
                let v = simpson(
                    |s| match self.eval(s).and_then(|(p, v)| f(&p, &v)) {
                        Ok(y) => y,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    self.t0,
                    self.t1,
                    panels,
                );
                match err {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            }
            Repr::Sampled { t, x, xdot } => {
                let vals = x.iter().zip(xdot).map(|(p, v)| f(p, v)).collect::<Result<Vec<_>>>()?;
                if fd::is_uniform(t) {
                    Ok(simpson_samples(&vals, t[1] - t[0]))
                } else {
                    Ok(t.windows(2)
                        .zip(vals.windows(2))
                        .map(|(s, v)| 0.5 * (s[1] - s[0]) * (v[0] + v[1]))
                        .sum())
                }
            }
        }
    }
}
