use std::collections::HashMap;

use crate::curve::Curve;
use crate::expr::{Compiled, Expr, Vars};
use crate::geometry::{Distribution, PfaffForm};
use crate::ocp::{const_value, Boundary, BoundaryKind, CostFunctional, CostKind, Horizon, OCProblem, Sense, Trajectory};
use crate::pmp::ResidualReport;
use crate::{Error, Result};

use super::{staircase, Order, Sheet};

/// A Pfaff constraint `a_1 dx + a_2 dy + a_3 dz = 0` with constant `a_3`,
/// read as the graph `∂_α z = A_α = −a_α / a_3` over the parameters
/// `(x, y)`, together with a curvilinear cost `L_α dt^α`.
///
/// The control 1-form is `η_α = L_α + p A_α` (maximization-canonical),
/// the costate obeys `∂_α p = −∂_z η_α`, and the controls solve
/// `Σ_α ∂η_α/∂u^a = 0` symbolically when that system is linear and
/// decoupled.
#[derive(Debug, Clone)]
pub struct GraphSystem {
    pub params: Vec<String>,
    pub dep: String,
    pub costate: String,
    pub controls: Vec<String>,
    pub lagrangians: Vec<Expr>,
    /// `A_α` with the controls free.
    pub slopes: Vec<Expr>,
    /// Control laws over `(x, y, z, p)`.
    pub law: Vec<Expr>,
    /// `F_α = A_α` with the laws substituted.
    pub rhs: Vec<Expr>,
    /// `G_α = −∂_z η_α` with the laws substituted.
    pub adjoint: Vec<Expr>,
    /// Integrability residuals `D_2 F_1 − D_1 F_2` and `D_2 G_1 − D_1 G_2`.
    pub integrability: Vec<Expr>,
    explicit: Vec<bool>,
    vars: Vars,
    rhs_c: Vec<Compiled>,
    adj_c: Vec<Compiled>,
    law_c: Vec<Compiled>,
    slope_c: Vec<Compiled>,
    eta_z: Vec<Compiled>,
    // [α][a]
    eta_u: Vec<Vec<Compiled>>,
    integ_c: Vec<Compiled>,
}

/// Builds the graph system of a two-parameter Pfaff problem on three
/// states; the first two states are the parameters.
pub fn graph_system(problem: &OCProblem) -> Result<GraphSystem> {
    let w = match &problem.distribution {
        Distribution::Kernel(w) => w,
        Distribution::Span { .. } => return Err(Error::Unsupported("graph system of a span distribution".into())),
    };
    if problem.m != 2 || problem.n() != 3 {
        return Err(Error::Unsupported(format!(
            "Pfaff graphs need m = 2 and n = 3, got m = {} and n = {}",
            problem.m,
            problem.n()
        )));
    }
    let diags = problem.validate();
    if !diags.is_empty() {
        return Err(Error::Invalid(
            diags.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "),
        ));
    }
    let a = w.coefficients();
    let a3 = const_value(&a[2]).filter(|c| *c != 0.0).ok_or_else(|| {
        Error::Invalid("last Pfaff coefficient must be a nonzero constant".into())
    })?;
    let params: Vec<String> = problem.state[..2].to_vec();
    let dep = problem.state[2].clone();
    let costate = format!("p_{dep}");
    let sign = problem.sense.sign();
    let lagrangians: Vec<Expr> = match &problem.cost.kind {
        CostKind::Curvilinear(ls) => ls.iter().map(|l| (Expr::c(sign) * l.clone()).simplify()).collect(),
        CostKind::SimpleIntegral(l) if l.is_zero() => vec![Expr::zero(), Expr::zero()],
        _ => return Err(Error::Unsupported("Pfaff graphs take a curvilinear cost".into())),
    };
    let slopes: Vec<Expr> = (0..2).map(|al| (Expr::c(-1.0 / a3) * a[al].clone()).simplify()).collect();
    let p = Expr::var(&costate);
    let eta: Vec<Expr> = (0..2)
        .map(|al| (lagrangians[al].clone() + p.clone() * slopes[al].clone()).simplify())
        .collect();

    let controls = problem.controls.clone();
    let mut law: Vec<Option<Expr>> = controls.iter().map(|c| problem.laws.get(c).cloned()).collect();
    let explicit: Vec<bool> = law.iter().map(Option::is_some).collect();
    let free: Vec<usize> = (0..controls.len()).filter(|&a| law[a].is_none()).collect();
    for &a in &free {
        let u = &controls[a];
        let e = Expr::sum(eta.iter().map(|h| h.diff(u))).simplify();
        let slope = e.diff(u);
        let c = const_value(&slope).filter(|c| *c != 0.0).ok_or_else(|| {
            Error::Unsupported(format!("stationarity in `{u}` is not linear with a constant coefficient"))
        })?;
        if let Some(b) = free.iter().find(|&&b| b != a && !e.diff(&controls[b]).is_zero()) {
            return Err(Error::Unsupported(format!(
                "stationarity couples `{u}` and `{}`",
                controls[*b]
            )));
        }
        let mut at_zero = HashMap::new();
        at_zero.insert(u.clone(), Expr::zero());
        law[a] = Some((Expr::c(-1.0 / c) * e.substitute(&at_zero)).simplify());
    }
    let law: Vec<Expr> = law.into_iter().map(|l| l.expect("law")).collect();
    let subst: HashMap<String, Expr> = controls.iter().cloned().zip(law.iter().cloned()).collect();
    let rhs: Vec<Expr> = slopes.iter().map(|s| s.substitute(&subst).simplify()).collect();
    let adjoint: Vec<Expr> = eta.iter().map(|h| (-h.diff(&dep)).substitute(&subst).simplify()).collect();

    let total = |e: &Expr, be: usize| -> Expr {
        (e.diff(&params[be]) + e.diff(&dep) * rhs[be].clone() + e.diff(&costate) * adjoint[be].clone()).simplify()
    };
    let integrability = vec![
        (total(&rhs[0], 1) - total(&rhs[1], 0)).simplify(),
        (total(&adjoint[0], 1) - total(&adjoint[1], 0)).simplify(),
    ];

    let mut vars = Vars::new(&problem.state);
    vars.push(&costate);
    for c in &controls {
        vars.push(c);
    }
    let c = |e: &Expr| -> Result<Compiled> { Ok(e.compile(&vars)?) };
    let all = |v: &[Expr]| v.iter().map(c).collect::<Result<Vec<_>>>();
    Ok(GraphSystem {
        rhs_c: all(&rhs)?,
        adj_c: all(&adjoint)?,
        law_c: all(&law)?,
        slope_c: all(&slopes)?,
        eta_z: all(&eta.iter().map(|h| h.diff(&dep)).collect::<Vec<_>>())?,
        eta_u: eta
            .iter()
            .map(|h| all(&controls.iter().map(|u| h.diff(u)).collect::<Vec<_>>()))
            .collect::<Result<_>>()?,
        integ_c: all(&integrability)?,
        params,
        dep,
        costate,
        controls,
        lagrangians,
        slopes,
        law,
        rhs,
        adjoint,
        integrability,
        explicit,
        vars,
    })
}

impl GraphSystem {
    /// Slot layout `[x, y, z, p, controls…]` of the compiled kernels.
    pub fn layout(&self) -> &Vars {
        &self.vars
    }

    fn slots(&self, xy: [f64; 2], z: f64, p: f64, u: &[f64]) -> Vec<f64> {
        let mut s = vec![xy[0], xy[1], z, p];
        s.extend_from_slice(u);
        s
    }

    /// Controls from the laws at `(x, y, z, p)`.
    pub fn controls_at(&self, xy: [f64; 2], z: f64, p: f64) -> Result<Vec<f64>> {
        let s = self.slots(xy, z, p, &vec![0.0; self.controls.len()]);
        self.law_c.iter().map(|c| Ok(c.eval(&s)?)).collect()
    }

    /// `(∂_α z, ∂_α p)` at a point.
    pub fn field(&self, axis: usize, xy: [f64; 2], z: f64, p: f64) -> Result<[f64; 2]> {
        let s = self.slots(xy, z, p, &vec![0.0; self.controls.len()]);
        Ok([self.rhs_c[axis].eval(&s)?, self.adj_c[axis].eval(&s)?])
    }

    /// Sup of both integrability residuals over a seeded cloud in
    /// `[−1, 1]^4` of `(x, y, z, p)`.
    pub fn integrability_sup(&self, seed: u64) -> Result<f64> {
        let k = self.controls.len();
        let mut sup = 0.0f64;
        for pt in crate::sample::cloud(4, crate::sample::CLOUD_SIZE, seed) {
            let s = self.slots([pt[0], pt[1]], pt[2], pt[3], &vec![0.0; k]);
            for c in &self.integ_c {
                sup = sup.max(c.eval(&s)?.abs());
            }
        }
        Ok(sup)
    }

    pub fn is_integrable(&self, seed: u64) -> Result<bool> {
        Ok(self.integrability_sup(seed)? < 1e-10)
    }

    /// Staircase integration of `(z, p)` over the parameter grid.
    pub fn integrate_sheet(&self, z0: f64, p0: f64, t1: &[f64], t2: &[f64], order: Order) -> Result<Sheet<f64>> {
        if t1.is_empty() || t2.is_empty() {
            return Ok(Sheet::default());
        }
        let nodes = staircase(
            |al, t, y, o| {
                let f = self.field(al, t, y[0], y[1])?;
                o.copy_from_slice(&f);
                Ok(())
            },
            &[z0, p0],
            t1,
            t2,
            order,
        )?;
        let mut sheet = Sheet {
            t1: t1.to_vec(),
            t2: t2.to_vec(),
            ..Default::default()
        };
        let mut ps = Vec::with_capacity(nodes.len());
        for (node, y) in nodes.iter().enumerate() {
            let xy = [t1[node / t2.len()], t2[node % t2.len()]];
            sheet.x.push(vec![xy[0], xy[1], y[0]]);
            sheet.u.push(self.controls_at(xy, y[0], y[1])?);
            ps.push(vec![y[1]]);
        }
        sheet.p = Some(ps);
        let sup = self.integrability_sup(crate::sample::DEFAULT_SEED)?;
        if sup >= 1e-10 {
            sheet.notes.push(format!(
                "graph is not completely integrable (residual {sup:e}); the sheet depends on the integration order"
            ));
        }
        Ok(sheet)
    }

    /// Curve-restricted evolution: `dz/dτ = F_α ẋ^α`, `dp/dτ = G_α ẋ^α`
    /// along a plane curve, RK4 with `steps` steps.
    pub fn integrate_curve(&self, curve: &Curve, z0: f64, p0: f64, steps: usize) -> Result<Trajectory<f64>> {
        crate::error::check_dim("parameter curve", 2, curve.dim())?;
        let (t0, t1) = curve.interval();
        let grid = crate::num::linspace(t0, t1, steps.max(1));
        let rhs = |s: f64, y: &[f64], o: &mut [f64]| -> Result<()> {
            let (pos, vel) = curve.eval(s)?;
            let xy = [pos[0], pos[1]];
            let f0 = self.field(0, xy, y[0], y[1])?;
            let f1 = self.field(1, xy, y[0], y[1])?;
            o[0] = f0[0] * vel[0] + f1[0] * vel[1];
            o[1] = f0[1] * vel[0] + f1[1] * vel[1];
            Ok(())
        };
        let ys = crate::ode::rk4_grid(rhs, &grid, &[z0, p0])?;
        let mut tr = Trajectory::default();
        for (s, y) in grid.iter().zip(&ys) {
            let (pos, _) = curve.eval(*s)?;
            tr.x.push(vec![pos[0], pos[1], y[0]]);
            tr.u.push(self.controls_at([pos[0], pos[1]], y[0], y[1])?);
            tr.p.push(vec![y[1]]);
        }
        tr.t = grid;
        Ok(tr)
    }

    /// Residuals along a sheet with states `(x, y, z)`, costate `p` and
    /// node controls: `dynamics` (∂_α z = A_α), `adjoint`
    /// (∂_α p = −∂_z η_α), `stationarity` (∂η_α/∂u^a = 0 for controls
    /// without an explicit law) and `control_law`.
    pub fn residuals(&self, sheet: &Sheet<f64>) -> Result<ResidualReport> {
        let k = self.controls.len();
        sheet.check(3, k)?;
        let p = sheet
            .p
            .as_ref()
            .ok_or_else(|| Error::Invalid("graph residuals need costates on the sheet".into()))?;
        let zd = sheet.partials(&Sheet::column(&sheet.x, 2));
        let pd = sheet.partials(&Sheet::column(p, 0));
        let (mut dynamics, mut adjoint, mut stationarity, mut law) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for node in 0..sheet.x.len() {
            let x = &sheet.x[node];
            let s = self.slots([x[0], x[1]], x[2], p[node][0], &sheet.u[node]);
            for al in 0..2 {
                dynamics = dynamics.max((zd[al][node] - self.slope_c[al].eval(&s)?).abs());
                adjoint = adjoint.max((pd[al][node] + self.eta_z[al].eval(&s)?).abs());
                for a in 0..k {
                    if !self.explicit[a] {
                        stationarity = stationarity.max(self.eta_u[al][a].eval(&s)?.abs());
                    }
                }
            }
            for a in 0..k {
                if self.explicit[a] {
                    law = law.max((sheet.u[node][a] - self.law_c[a].eval(&s)?).abs());
                }
            }
        }
        let mut r = ResidualReport::default();
        r.insert("dynamics", dynamics);
        r.insert("adjoint", adjoint);
        r.insert("stationarity", stationarity);
        if self.explicit.iter().any(|e| *e) {
            r.insert("control_law", law);
        }
        Ok(r)
    }
}

/// Torsion of a cylinder: `dz = (y + u)dx + (−x + v)dy`, minimizing
/// `∫ (z + u²)c1 dx + (z + v²)c2 dy` with `z(0, 0) = 0`.
pub fn torsion_problem(c1: f64, c2: f64) -> Result<OCProblem> {
    let state = ["x", "y", "z"];
    let vars = ["x", "y", "z", "u", "v"];
    let w = PfaffForm::parse(&["y+u", "-x+v", "-1"], &vars)?;
    let mut p = OCProblem::pfaff("torsion", &state, &["u", "v"], w);
    p.m = 2;
    p.cost = CostFunctional {
        kind: CostKind::Curvilinear(vec![
            crate::parse(&format!("(z+u^2)*{c1:?}"), &vars)?,
            crate::parse(&format!("(z+v^2)*{c2:?}"), &vars)?,
        ]),
        terminal: None,
    };
    p.sense = Sense::Minimize;
    p.boundary = Boundary {
        x0: vec![Some(0.0); 3],
        x1: None,
        kind: BoundaryKind::Transversality,
    };
    p.horizon = Horizon::Rectangle(vec![1.0, 1.0]);
    Ok(p)
}

#[derive(Debug, Clone)]
pub enum TorsionBranch {
    /// Completely integrable: the evolution surface `z(x, y)`.
    Surface(Expr),
    /// Only curves: `dz/dτ` along the path and the integrated evolution.
    Curve {
        path: Curve,
        dz: Expr,
        trajectory: Trajectory<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct TorsionSolution {
    pub problem: OCProblem,
    /// `p = c1 x + c2 y`.
    pub costate: Expr,
    pub u: Expr,
    pub v: Expr,
    /// `c1² − 4 c1 c2 − c2²`; zero on the integrable branch.
    pub condition: f64,
    pub branch: TorsionBranch,
}

/// Closed-form extremal of the torsion problem. Without a path, the
/// curve branch follows the segment from the origin to `(1, 1)`.
pub fn torsion_solve(c1: f64, c2: f64, path: Option<Curve>) -> Result<TorsionSolution> {
    if c1 == 0.0 || c2 == 0.0 {
        return Err(Error::Invalid("torsion weights must be nonzero".into()));
    }
    let xy = ["x", "y"];
    let costate = crate::parse(&format!("{c1:?}*x + {c2:?}*y"), &xy)?.simplify();
    let u = (costate.clone() / Expr::c(2.0 * c1)).simplify();
    let v = (costate.clone() / Expr::c(2.0 * c2)).simplify();
    let condition = c1 * c1 - 4.0 * c1 * c2 - c2 * c2;
    let problem = torsion_problem(c1, c2)?;
    let branch = if condition.abs() <= 1e-12 * (c1 * c1 + c2 * c2) {
        let s = crate::parse(&format!("x*y + x^2/4 + y^2/4 + {:?}*x*y", c2 / (2.0 * c1)), &xy)?;
        TorsionBranch::Surface(s.simplify())
    } else {
        let path = match path {
            Some(p) => p,
            None => Curve::straight(&[0.0, 0.0], &[1.0, 1.0])?,
        };
        let comps = path
            .components()
            .ok_or_else(|| Error::Unsupported("curve branch needs a symbolic path".into()))?;
        crate::error::check_dim("torsion path", 2, comps.len())?;
        let tau = "tau";
        let (x, y) = (comps[0].clone(), comps[1].clone());
        let (dx, dy) = (x.diff(tau), y.diff(tau));
        let pc = Expr::c(c1) * x.clone() + Expr::c(c2) * y.clone();
        let dz = (y.clone() * dx.clone() - x.clone() * dy.clone()
            + pc * (dx / Expr::c(2.0 * c1) + dy / Expr::c(2.0 * c2)))
        .simplify();
        let trajectory = graph_system(&problem)?.integrate_curve(&path, 0.0, 0.0, 1000)?;
        TorsionBranch::Curve { path, dz, trajectory }
    };
    Ok(TorsionSolution {
        problem,
        costate,
        u,
        v,
        condition,
        branch,
    })
}
