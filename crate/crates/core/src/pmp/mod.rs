//! Single-time maximum principle: Hamiltonian assembly, extremal
//! integration, residual checks and indirect shooting.
//!
//! Everything runs on the maximization-canonical problem; a minimized cost
//! is negated first. The Hamiltonian is `H = L + p_i f^i(t, x, u)` where
//! `f` is the problem's normal form, and costates are named `p_<state>`.

mod shoot;

use std::collections::BTreeMap;

use crate::bang::bang_law_box;
use crate::expr::{Compiled, Expr, Vars};
use crate::fd;
use crate::geometry::Distribution;
use crate::linalg::Lu;
use crate::ocp::{BoundaryKind, ControlBox, OCProblem, Trajectory};
use crate::ode::{rk4_step, Rk4Work};
use crate::{Error, Result, Scalar};

pub use shoot::{shoot, ShootOptions, ShootOutcome};

/// How controls without an explicit law are resolved at each point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlLaw {
    /// Solve `H_u = 0` by damped Newton.
    Stationary,
    /// `H` linear in the controls: vertex of the box picked by the sign of
    /// the switching value `Q = −H_u`.
    Bang { eps: f64 },
}

/// Residual norms keyed by condition name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualReport {
    entries: BTreeMap<String, f64>,
}

impl ResidualReport {
    pub fn insert(&mut self, name: &str, value: f64) {
        self.entries.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    /// Largest entry (NaN-propagating).
    pub fn max(&self) -> f64 {
        self.entries
            .values()
            .fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(*v) })
    }
}

#[derive(Debug, Clone)]
struct Kernels {
    h: Compiled,
    h_x: Vec<Compiled>,
    h_u: Vec<Compiled>,
    h_p: Vec<Compiled>,
    h_uu: Vec<Vec<Compiled>>,
    laws: Vec<Option<Compiled>>,
    law_x: Vec<Vec<Compiled>>,
    terminal_grad: Vec<Compiled>,
}

/// Symbolic Hamiltonian with its partials, compiled over the slot layout
/// `[t, x…, u…, p…]`.
#[derive(Debug, Clone)]
pub struct HamiltonianData {
    pub time: String,
    pub state: Vec<String>,
    pub controls: Vec<String>,
    pub costate: Vec<String>,
    pub bounds: ControlBox,
    pub lagrangian: Expr,
    pub dynamics: Vec<Expr>,
    pub h: Expr,
    pub h_x: Vec<Expr>,
    pub h_u: Vec<Expr>,
    pub h_p: Vec<Expr>,
    pub h_uu: Vec<Vec<Expr>>,
    /// Canonical terminal payoff `g(x)` and its gradient.
    pub terminal: Option<Expr>,
    pub terminal_grad: Vec<Expr>,
    /// Explicit law per control, if any.
    pub laws: Vec<Option<Expr>>,
    vars: Vars,
    k: Kernels,
}

/// Assembles `H` and its partials for a validated single-time problem.
pub fn build_hamiltonian(problem: &OCProblem) -> Result<HamiltonianData> {
    if problem.m != 1 {
        return Err(Error::Unsupported(format!(
            "single-time Hamiltonian requested for m = {}",
            problem.m
        )));
    }
    let diags = problem.validate();
    if !diags.is_empty() {
        return Err(Error::Invalid(
            diags.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "),
        ));
    }
    let nf = problem.normal_form()?;
    let state = problem.state.clone();
    let costate: Vec<String> = state.iter().map(|s| format!("p_{s}")).collect();
    let time = "t".to_string();
    let lagrangian = problem.canonical_lagrangian();
    let h = Expr::sum(
        std::iter::once(lagrangian.clone()).chain(
            costate
                .iter()
                .zip(&nf.dynamics)
                .filter(|(_, f)| !f.is_zero())
                .map(|(p, f)| Expr::var(p) * f.clone()),
        ),
    )
    .simplify();
    let h_x: Vec<Expr> = state.iter().map(|s| h.diff(s)).collect();
    let h_u: Vec<Expr> = nf.controls.iter().map(|u| h.diff(u)).collect();
    let h_p: Vec<Expr> = costate.iter().map(|p| h.diff(p)).collect();
    let h_uu: Vec<Vec<Expr>> = h_u
        .iter()
        .map(|hu| nf.controls.iter().map(|v| hu.diff(v)).collect())
        .collect();
    let terminal = problem.canonical_terminal();
    let terminal_grad: Vec<Expr> = state
        .iter()
        .map(|s| terminal.as_ref().map_or_else(Expr::zero, |g| g.diff(s)))
        .collect();
    let laws: Vec<Option<Expr>> = nf.controls.iter().map(|u| problem.laws.get(u).cloned()).collect();

    let mut vars = Vars::default();
    vars.push(&time);
    for s in state.iter().chain(&nf.controls).chain(&costate) {
        vars.push(s);
    }
    let compile = |e: &Expr| -> Result<Compiled> { Ok(e.compile(&vars)?) };
    let compile_all = |v: &[Expr]| v.iter().map(compile).collect::<Result<Vec<_>>>();
    let k = Kernels {
        h: compile(&h)?,
        h_x: compile_all(&h_x)?,
        h_u: compile_all(&h_u)?,
        h_p: compile_all(&h_p)?,
        h_uu: h_uu.iter().map(|r| compile_all(r)).collect::<Result<_>>()?,
        laws: laws.iter().map(|l| l.as_ref().map(compile).transpose()).collect::<Result<_>>()?,
        law_x: laws
            .iter()
            .map(|l| match l {
                Some(l) => compile_all(&state.iter().map(|s| l.diff(s)).collect::<Vec<_>>()),
                None => Ok(Vec::new()),
            })
            .collect::<Result<_>>()?,
        terminal_grad: compile_all(&terminal_grad)?,
    };
    Ok(HamiltonianData {
        time,
        state,
        controls: nf.controls,
        costate,
        bounds: nf.bounds,
        lagrangian,
        dynamics: nf.dynamics,
        h,
        h_x,
        h_u,
        h_p,
        h_uu,
        terminal,
        terminal_grad,
        laws,
        vars,
        k,
    })
}

/// Outcome of resolving the controls at one point.
struct Resolved<T> {
    u: Vec<T>,
    /// Switching values `−H_u` (bang law only).
    q: Option<Vec<T>>,
    clipped: bool,
}

impl HamiltonianData {
    pub fn n(&self) -> usize {
        self.state.len()
    }

    pub fn k(&self) -> usize {
        self.controls.len()
    }

    /// Slot layout `[t, x…, u…, p…]`.
    pub fn layout(&self) -> &Vars {
        &self.vars
    }

    fn slots<T: Scalar>(&self, t: T, x: &[T], u: &[T], p: &[T]) -> Vec<T> {
        let mut z = Vec::with_capacity(1 + 2 * self.n() + self.k());
        z.push(t);
        z.extend_from_slice(x);
        z.extend_from_slice(u);
        z.extend_from_slice(p);
        z
    }

    fn u_range(&self) -> std::ops::Range<usize> {
        1 + self.n()..1 + self.n() + self.k()
    }

    fn eval_all<T: Scalar>(cs: &[Compiled], z: &[T]) -> Result<Vec<T>> {
        cs.iter().map(|c| Ok(c.eval(z)?)).collect()
    }

    pub fn hamiltonian<T: Scalar>(&self, t: T, x: &[T], u: &[T], p: &[T]) -> Result<T> {
        Ok(self.k.h.eval(&self.slots(t, x, u, p))?)
    }

    /// `∂H/∂p`, the dynamics right-hand side.
    pub fn dynamics_rhs<T: Scalar>(&self, t: T, x: &[T], u: &[T], p: &[T]) -> Result<Vec<T>> {
        Self::eval_all(&self.k.h_p, &self.slots(t, x, u, p))
    }

    /// `ṗ = −(H_x + H_u·∂law/∂x)`; the law terms vanish for open-loop and
    /// stationary controls.
    pub fn adjoint_rhs<T: Scalar>(&self, t: T, x: &[T], u: &[T], p: &[T]) -> Result<Vec<T>> {
        let z = self.slots(t, x, u, p);
        let mut out = Self::eval_all(&self.k.h_x, &z)?;
        for (a, lx) in self.k.law_x.iter().enumerate() {
            if lx.is_empty() {
                continue;
            }
            let hu = self.k.h_u[a].eval(&z)?;
            for (i, c) in lx.iter().enumerate() {
                out[i] += hu * c.eval(&z)?;
            }
        }
        out.iter_mut().for_each(|v| *v = -*v);
        Ok(out)
    }

    pub fn h_u_values<T: Scalar>(&self, t: T, x: &[T], u: &[T], p: &[T]) -> Result<Vec<T>> {
        Self::eval_all(&self.k.h_u, &self.slots(t, x, u, p))
    }

    pub fn terminal_gradient<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let z = self.slots(T::zero(), x, &vec![T::zero(); self.k()], &vec![T::zero(); self.n()]);
        Self::eval_all(&self.k.terminal_grad, &z)
    }

    fn resolve<T: Scalar>(&self, law: ControlLaw, t: T, x: &[T], p: &[T], guess: &[T]) -> Result<Resolved<T>> {
        let kk = self.k();
        let mut z = self.slots(t, x, guess, p);
        let ur = self.u_range();
        for (a, l) in self.k.laws.iter().enumerate() {
            if let Some(c) = l {
                z[ur.start + a] = c.eval(&z)?;
            }
        }
        let free: Vec<usize> = (0..kk).filter(|a| self.k.laws[*a].is_none()).collect();
        let mut q = None;
        let mut clipped = false;
        if !free.is_empty() {
            match law {
                ControlLaw::Stationary => {
                    self.stationary(&mut z, &free)?;
                    let mut u: Vec<T> = z[ur.clone()].to_vec();
                    clipped = self.bounds.clip(&mut u);
                    z[ur.clone()].copy_from_slice(&u);
                }
                ControlLaw::Bang { eps } => {
                    for &a in &free {
                        z[ur.start + a] = T::zero();
                    }
                    let sigma: Vec<T> = free.iter().map(|&a| self.k.h_u[a].eval(&z)).collect::<Result<_, _>>()?;
                    let qv: Vec<T> = sigma.iter().map(|s| -*s).collect();
                    let lower: Vec<f64> = free.iter().map(|&a| self.bounds.lower[a]).collect();
                    let upper: Vec<f64> = free.iter().map(|&a| self.bounds.upper[a]).collect();
                    let (u, _) = bang_law_box(&qv, T::lit(eps), &lower, &upper);
                    for (i, &a) in free.iter().enumerate() {
                        z[ur.start + a] = u[i];
                    }
                    let mut full = vec![T::zero(); kk];
                    for (i, &a) in free.iter().enumerate() {
                        full[a] = qv[i];
                    }
                    q = Some(full);
                }
            }
        }
        Ok(Resolved {
            u: z[ur].to_vec(),
            q,
            clipped,
        })
    }

    /// Damped Newton on `H_u[free] = 0` in place on the slot vector.
    fn stationary<T: Scalar>(&self, z: &mut [T], free: &[usize]) -> Result<()> {
        let ur = self.u_range().start;
        let m = free.len();
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(1e3));
        let grad = |z: &[T]| -> Result<Vec<T>> { free.iter().map(|&a| Ok(self.k.h_u[a].eval(z)?)).collect() };
        let mut g = grad(z)?;
        let mut norm = crate::num::norm_inf(&g);
        let mut it = 0;
        while norm > tol && it < 20 {
            it += 1;
            let mut jac = Vec::with_capacity(m * m);
            for &a in free {
                for &b in free {
                    jac.push(self.k.h_uu[a][b].eval(z)?);
                }
            }
            let lu = Lu::factor(&jac, m).map_err(|_| Error::Stationarity {
                residual: norm.to_f64_lossy(),
                iterations: it,
            })?;
            let neg: Vec<T> = g.iter().map(|v| -*v).collect();
            let d = lu.solve(&neg);
            let base: Vec<T> = free.iter().map(|&a| z[ur + a]).collect();
            let mut alpha = T::one();
            let mut accepted = false;
            for _ in 0..12 {
                for (i, &a) in free.iter().enumerate() {
                    z[ur + a] = base[i] + alpha * d[i];
                }
                if let Ok(gn) = grad(z) {
                    let nn = crate::num::norm_inf(&gn);
                    if nn < norm || nn <= tol {
                        g = gn;
                        norm = nn;
                        accepted = true;
                        break;
                    }
                }
                alpha /= T::lit(2.0);
            }
            if !accepted {
                for (i, &a) in free.iter().enumerate() {
                    z[ur + a] = base[i];
                }
                break;
            }
        }
        if norm > tol {
            return Err(Error::Stationarity {
                residual: norm.to_f64_lossy(),
                iterations: it,
            });
        }
        Ok(())
    }

    /// Fixed-step RK4 integration of the state/costate system with controls
    /// resolved at every stage.
    pub fn integrate_extremal<T: Scalar>(
        &self,
        x0: &[T],
        p0: &[T],
        law: ControlLaw,
        grid: &[T],
    ) -> Result<Trajectory<T>> {
        let n = self.n();
        crate::error::check_dim("initial state", n, x0.len())?;
        crate::error::check_dim("initial costate", n, p0.len())?;
        if grid.is_empty() {
            return Err(Error::Invalid("empty time grid".into()));
        }
        let mut guess = vec![T::zero(); self.k()];
        let mut y: Vec<T> = x0.iter().chain(p0).copied().collect();
        let mut work = Rk4Work::new(2 * n);
        let mut traj = Trajectory {
            t: Vec::with_capacity(grid.len()),
            ..Default::default()
        };
        let mut clipped_nodes = 0usize;
        let mut qs = Vec::new();
        for (i, &t) in grid.iter().enumerate() {
            if i > 0 {
                let mut rhs = |s: T, w: &[T], out: &mut [T]| -> Result<()> {
                    let (x, p) = w.split_at(n);
                    let r = self.resolve(law, s, x, p, &guess)?;
                    guess.copy_from_slice(&r.u);
                    out[..n].copy_from_slice(&self.dynamics_rhs(s, x, &r.u, p)?);
                    out[n..].copy_from_slice(&self.adjoint_rhs(s, x, &r.u, p)?);
                    Ok(())
                };
                rk4_step(&mut rhs, grid[i - 1], &mut y, t - grid[i - 1], &mut work)?;
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("extremal at t = {t}")));
                }
            }
            let (x, p) = y.split_at(n);
            let r = self.resolve(law, t, x, p, &guess)?;
            guess.copy_from_slice(&r.u);
            if r.clipped {
                clipped_nodes += 1;
            }
            traj.t.push(t);
            traj.h.push(self.hamiltonian(t, x, &r.u, p)?);
            traj.x.push(x.to_vec());
            traj.p.push(p.to_vec());
            traj.u.push(r.u);
            if let Some(q) = r.q {
                qs.push(q);
            }
        }
        if !qs.is_empty() {
            traj.q = Some(qs);
        }
        if clipped_nodes > 0 {
            traj.notes.push(format!("controls clipped to the box at {clipped_nodes} nodes"));
        }
        Ok(traj)
    }

    /// Sup-norm residuals of the necessary conditions along `cand`.
    pub fn residuals<T: Scalar>(&self, problem: &OCProblem, cand: &Trajectory<T>) -> Result<ResidualReport> {
        let n = self.n();
        let kk = self.k();
        cand.check(n, kk)?;
        let len = cand.len();
        let mut report = ResidualReport::default();
        if len == 0 {
            return Ok(report);
        }
        let f = |v: T| v.to_f64_lossy();
        let xdot: Vec<Vec<T>> = (0..n).map(|i| fd::derivative(&cand.t, &cand.state_column(i))).collect();
        let pdot: Vec<Vec<T>> = (0..n).map(|i| fd::derivative(&cand.t, &cand.costate_column(i))).collect();

        let mut dynamics = 0.0f64;
        let mut adjoint = 0.0f64;
        let mut stationarity = 0.0f64;
        let mut law_res = 0.0f64;
        let (ur, _) = (self.u_range(), ());
        for k in 0..len {
            let (t, x, u, p) = (cand.t[k], &cand.x[k], &cand.u[k], &cand.p[k]);
            let fx = self.dynamics_rhs(t, x, u, p)?;
            let ax = self.adjoint_rhs(t, x, u, p)?;
            for i in 0..n {
                dynamics = dynamics.max(f((xdot[i][k] - fx[i]).abs()));
                adjoint = adjoint.max(f((pdot[i][k] - ax[i]).abs()));
            }
            let z = self.slots(t, x, u, p);
            for a in 0..kk {
                if let Some(c) = &self.k.laws[a] {
                    law_res = law_res.max(f((z[ur.start + a] - c.eval(&z)?).abs()));
                    continue;
                }
                let hu = f(self.k.h_u[a].eval(&z)?);
                let ua = f(u[a]);
                let (lo, hi) = (self.bounds.lower[a], self.bounds.upper[a]);
                let r = if lo == hi {
                    0.0
                } else if hi.is_finite() && ua >= hi - 1e-12 {
                    (-hu).max(0.0)
                } else if lo.is_finite() && ua <= lo + 1e-12 {
                    hu.max(0.0)
                } else {
                    hu.abs()
                };
                stationarity = stationarity.max(r);
            }
        }
        report.insert("dynamics", dynamics);
        report.insert("adjoint", adjoint);
        report.insert("stationarity", stationarity);
        if self.k.laws.iter().any(Option::is_some) {
            report.insert("control_law", law_res);
        }

        let b = &problem.boundary;
        let mut boundary = 0.0f64;
        let first = &cand.x[0];
        let last = &cand.x[len - 1];
        for (i, v) in b.x0.iter().enumerate() {
            if let Some(v) = v {
                boundary = boundary.max((f(first[i]) - v).abs());
            }
        }
        let targets: Vec<Option<f64>> = b.x1.clone().unwrap_or_else(|| vec![None; n]);
        let pend = &cand.p[len - 1];
        match b.kind {
            BoundaryKind::Transversality => {
                let g = self.terminal_gradient(last)?;
                for i in 0..n {
                    let r = match targets[i] {
                        Some(v) => f(last[i]) - v,
                        None => f(pend[i] - g[i]),
                    };
                    boundary = boundary.max(r.abs());
                }
            }
            BoundaryKind::ZeroCostate => {
                for i in 0..n {
                    boundary = boundary.max(f(cand.p[0][i]).abs()).max(f(pend[i]).abs());
                    if let Some(v) = targets[i] {
                        boundary = boundary.max((f(last[i]) - v).abs());
                    }
                }
            }
        }
        report.insert("boundary", boundary);

        let form = match &problem.distribution {
            Distribution::Kernel(w) => Some(w),
            Distribution::Span { pfaff, .. } => pfaff.as_ref(),
        };
        if let Some(w) = form {
            let cs = w
                .coefficients()
                .iter()
                .map(|a| Ok(a.compile(&self.vars)?))
                .collect::<Result<Vec<_>>>()?;
            let mut worst = 0.0f64;
            for k in 0..len {
                let z = self.slots(cand.t[k], &cand.x[k], &cand.u[k], &cand.p[k]);
                let mut s = T::zero();
                for (i, c) in cs.iter().enumerate() {
                    s += c.eval(&z)? * xdot[i][k];
                }
                worst = worst.max(f(s.abs()));
            }
            report.insert("pfaff_constraint", worst);
        }
        Ok(report)
    }
}

/// Builds the Hamiltonian of `problem` and evaluates every necessary
/// condition along `candidate`.
pub fn check_extremal<T: Scalar>(problem: &OCProblem, candidate: &Trajectory<T>) -> Result<ResidualReport> {
    build_hamiltonian(problem)?.residuals(problem, candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, VarEnv};
    use crate::geometry::{PfaffForm, VectorField};
    use crate::num::linspace;
    use crate::ocp::{Boundary, CostFunctional, CostKind, Sense};

    pub(crate) fn martinet() -> OCProblem {
        let v = ["x", "y", "z", "u"];
        let w = PfaffForm::parse(&["1/2*(y^2+u)", "0", "-1"], &v).unwrap();
        let mut p = OCProblem::pfaff("martinet", &["x", "y", "z"], &["u"], w);
        p.cost = CostFunctional::simple(parse("1/2*(u^2+z^2)", &v).unwrap());
        p.sense = Sense::Minimize;
        p.boundary = Boundary::fixed(&[0.0, 1.0, 1.0], Some(&[0.0, 0.5f64.sqrt(), 1.0]));
        p
    }

    #[test]
    fn martinet_hamiltonian_matches_normal_form() {
        let hd = build_hamiltonian(&martinet()).unwrap();
        assert_eq!(hd.controls, ["u", "w_x", "w_y"]);
        let names = ["x", "y", "z", "u", "u1", "u2", "p1", "p2", "p"];
        let oracle = parse("-1/2*(z^2+u^2) + p1*u1 + p2*u2 + 1/2*p*(y^2+u)*u1", &names).unwrap();
        let rename = [("u1", "w_x"), ("u2", "w_y"), ("p1", "p_x"), ("p2", "p_y"), ("p", "p_z")];
        for pt in crate::sample::cloud(9, 20, 3) {
            let env: VarEnv<f64> = names.iter().map(|s| s.to_string()).zip(pt.iter().copied()).collect();
            let mut env2 = env.clone();
            for (a, b) in rename {
                env2.insert(b.to_string(), env[a]);
            }
            let lhs = hd.h.evaluate(&env2).unwrap();
            assert!((lhs - oracle.evaluate(&env).unwrap()).abs() < 1e-12);
        }
        // Adjoint components from the symbolic partials.
        let shown: Vec<String> = hd.h_x.iter().map(|e| e.to_string()).collect();
        assert_eq!(shown[0], "0");
        assert_eq!(shown[2], "-z");
    }

    #[test]
    fn simple_span_and_time_hamiltonians() {
        let p = OCProblem::span("s", &["x"], vec![VectorField::coordinate(1, 0)]);
        assert_eq!(build_hamiltonian(&p).unwrap().h.to_string(), "p_x*u");
        let mut p = OCProblem::span("s", &["x", "y"], vec![VectorField::parse(&["1", "x"], &["x", "y"]).unwrap()]);
        p.cost = CostFunctional {
            kind: CostKind::Time,
            terminal: None,
        };
        p.sense = Sense::Minimize;
        assert_eq!(build_hamiltonian(&p).unwrap().h.to_string(), "-1 + p_x*u + p_y*(u*x)");
    }

    #[test]
    fn multitime_rejected() {
        let mut p = martinet();
        p.m = 2;
        assert!(matches!(build_hamiltonian(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn consistency_of_partials() {
        let hd = build_hamiltonian(&martinet()).unwrap();
        let dyn_c: Vec<Compiled> = hd.dynamics.iter().map(|e| e.compile(hd.layout()).unwrap()).collect();
        for z in crate::sample::cloud(hd.layout().len(), 100, 11) {
            let (t, rest) = z.split_first().unwrap();
            let (x, rest) = rest.split_at(3);
            let (u, p) = rest.split_at(3);
            let hp = hd.dynamics_rhs(*t, x, u, p).unwrap();
            for (i, c) in dyn_c.iter().enumerate() {
                assert!((c.eval(&z).unwrap() - hp[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_fields_give_constant_costate() {
        let mut p = OCProblem::span("s", &["x", "y"], vec![VectorField::coordinate(2, 0), VectorField::coordinate(2, 1)]);
        p.laws.insert("u1".into(), Expr::c(0.5));
        p.laws.insert("u2".into(), Expr::c(-2.0));
        let hd = build_hamiltonian(&p).unwrap();
        let grid = linspace(0.0f64, 1.0, 100);
        let tr = hd.integrate_extremal(&[1.0, 1.0], &[0.3, 0.7], ControlLaw::Stationary, &grid).unwrap();
        let last = tr.x.last().unwrap();
        assert!((last[0] - 1.5).abs() < 1e-12 && (last[1] + 1.0).abs() < 1e-12);
        assert!(tr.p.iter().all(|p| p == &vec![0.3, 0.7]));
    }

    #[test]
    fn stationary_quadratic_control() {
        // H = −u² + p u: u = p/2.
        let mut p = OCProblem::span("s", &["x"], vec![VectorField::coordinate(1, 0)]);
        p.cost = CostFunctional::simple(parse("-u^2", &["u"]).unwrap());
        let hd = build_hamiltonian(&p).unwrap();
        let tr = hd
            .integrate_extremal(&[0.0], &[2.0], ControlLaw::Stationary, &linspace(0.0f64, 1.0, 10))
            .unwrap();
        assert!(tr.u.iter().all(|u| (u[0] - 1.0).abs() < 1e-12));
        assert!((tr.x[10][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_hamiltonian_cannot_be_made_stationary() {
        let hd = build_hamiltonian(&martinet()).unwrap();
        let r = hd.integrate_extremal(&[0.0, 1.0, 1.0], &[0.1, 0.2, 0.3], ControlLaw::Stationary, &linspace(0.0, 1.0, 4));
        assert!(matches!(r, Err(Error::Stationarity { .. })));
    }

    #[test]
    fn closed_loop_adjoint_includes_feedback_terms() {
        let mut p = OCProblem::span("s", &["x"], vec![VectorField::coordinate(1, 0)]);
        p.laws.insert("u".into(), Expr::var("x"));
        let hd = build_hamiltonian(&p).unwrap();
        let r = hd.adjoint_rhs(0.0, &[0.4], &[0.4], &[2.0]).unwrap();
        assert_eq!(r, vec![-2.0]);
    }
    fn martinet_candidate(nodes: usize, y_scale: f64) -> Trajectory<f64> {
        let t = linspace(0.0f64, 1.0, nodes - 1);
        let mut tr = Trajectory::default();
        for &s in &t {
            let y = y_scale / (s + 1.0).sqrt();
            tr.x.push(vec![0.0, y, 1.0]);
            tr.u.push(vec![0.0, 0.0, -0.5 * y_scale * (s + 1.0).powf(-1.5)]);
            tr.p.push(vec![-0.5, 0.0, s + 1.0]);
            tr.h.push(0.0);
        }
        tr.t = t;
        tr
    }

    #[test]
    fn martinet_second_variant_extremal() {
        let report = check_extremal(&martinet(), &martinet_candidate(1000, 1.0)).unwrap();
        let names: Vec<&str> = report.iter().map(|(k, _)| k).collect();
        assert_eq!(names, ["adjoint", "boundary", "dynamics", "pfaff_constraint", "stationarity"]);
        assert!(report.max() < 1e-8, "{report:?}");
    }

    #[test]
    fn perturbed_martinet_candidate_is_rejected() {
        let report = check_extremal(&martinet(), &martinet_candidate(1000, 1.1)).unwrap();
        let worst = report.get("stationarity").unwrap().max(report.get("pfaff_constraint").unwrap());
        assert!(worst > 1e-3, "{report:?}");
    }

    fn quadratic_heisenberg() -> OCProblem {
        let v = ["x", "y", "z"];
        let fields = vec![
            VectorField::parse(&["1", "0", "-y/2"], &v).unwrap(),
            VectorField::parse(&["0", "1", "x/2"], &v).unwrap(),
        ];
        let mut p = OCProblem::span("heis", &v, fields);
        p.cost = CostFunctional::simple(parse("-(u1^2+u2^2)/2 - z^2/2", &["z", "u1", "u2"]).unwrap());
        p.boundary = Boundary::fixed(&[0.1, -0.2, 0.3], None);
        p
    }

    #[test]
    fn hamiltonian_is_conserved() {
        let hd = build_hamiltonian(&quadratic_heisenberg()).unwrap();
        let tr = hd
            .integrate_extremal(&[0.1, -0.2, 0.3], &[0.4, 0.5, -0.6], ControlLaw::Stationary, &linspace(0.0f64, 1.0, 1000))
            .unwrap();
        let drift = tr.h.iter().map(|h| (h - tr.h[0]).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-6, "{drift}");
        // Stationary law u_a = p·X_a.
        let (x, p, u) = (&tr.x[500], &tr.p[500], &tr.u[500]);
        assert!((u[0] - (p[0] - p[2] * x[1] / 2.0)).abs() < 1e-10);
        assert!((u[1] - (p[1] + p[2] * x[0] / 2.0)).abs() < 1e-10);
    }

    #[test]
    fn residuals_decay_at_fourth_order() {
        let problem = quadratic_heisenberg();
        let hd = build_hamiltonian(&problem).unwrap();
        let res: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&n| {
                let tr = hd
                    .integrate_extremal(&[0.1, -0.2, 0.3], &[0.4, 0.5, -0.6], ControlLaw::Stationary, &linspace(0.0f64, 1.0, n))
                    .unwrap();
                let r = hd.residuals(&problem, &tr).unwrap();
                r.get("dynamics").unwrap().max(r.get("adjoint").unwrap())
            })
            .collect();
        for w in res.windows(2) {
            assert!((w[0] / w[1]).log2() >= 3.5, "{res:?}");
        }
    }

    #[test]
    fn torsion_along_diagonal() {
        let (c1, c2) = (2.0 + 5f64.sqrt(), 1.0);
        let v = ["x", "y", "z", "u", "v", "w_x", "w_y"];
        let w = PfaffForm::parse(&["y+u", "-x+v", "-1"], &v).unwrap();
        let mut p = OCProblem::pfaff("torsion", &["x", "y", "z"], &["u", "v"], w);
        let cost = format!("(z+u^2)*{c1}*w_x + (z+v^2)*{c2}*w_y");
        p.cost = CostFunctional::simple(parse(&cost, &v).unwrap());
        p.sense = Sense::Minimize;
        p.laws.insert("w_x".into(), Expr::one());
        p.laws.insert("w_y".into(), Expr::one());
        let z1 = (c1 + c2) * (c1 + c2) / (4.0 * c1 * c2);
        p.boundary = Boundary {
            x0: vec![Some(0.0); 3],
            x1: Some(vec![None, None, Some(z1)]),
            kind: BoundaryKind::Transversality,
        };
        let out = shoot(&p, &ShootOptions::default()).unwrap();
        assert!(out.converged);
        for k in 0..out.trajectory.len() {
            let t = out.trajectory.t[k];
            let pz = out.trajectory.p[k][2];
            let u = &out.trajectory.u[k];
            assert!((pz - (c1 + c2) * t).abs() < 1e-8);
            assert!((u[0] - pz / (2.0 * c1)).abs() < 1e-10);
            assert!((u[1] - pz / (2.0 * c2)).abs() < 1e-10);
        }
    }
}
