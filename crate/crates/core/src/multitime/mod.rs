//! Two-parameter evolutions `∂_α x = u^a_α X_a(x)`: complete-integrability
//! residuals, staircase sheet integration, curve criticality, residual
//! evaluators for multitime extremals, Pfaff graphs and vertex bang-bang
//! search.
//!
//! Parameters are named `t1`, `t2`; sheet controls are stored `α`-major.

mod graph;
mod vertex;

use crate::curve::Curve;
use crate::expr::{Compiled, Expr, Vars};
use crate::fd;
use crate::geometry::{lie_bracket, ControlSystem, Distribution};
use crate::ocp::{CostKind, OCProblem};
use crate::ode::{rk4_step, Rk4Work};
use crate::pmp::ResidualReport;
use crate::{Error, Result, Scalar};

pub use graph::{graph_system, torsion_problem, torsion_solve, GraphSystem, TorsionBranch, TorsionSolution};
pub use vertex::{multitime_bang, MultiBang, MultiBangOptions, VertexCandidate};

pub const TIME_NAMES: [&str; 2] = ["t1", "t2"];

/// Sup-norm above which `integrate_sheet` notes order dependence.
pub const CIC_WARN: f64 = 1e-6;

/// Discretized evolution over a rectangle grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sheet<T> {
    pub t1: Vec<T>,
    pub t2: Vec<T>,
    /// States; node `(i, j)` is stored at `i * t2.len() + j`.
    pub x: Vec<Vec<T>>,
    /// Controls `u^a_α` per node, `α` first.
    pub u: Vec<Vec<T>>,
    pub p: Option<Vec<Vec<T>>>,
    /// Switching values per node, laid out like `u`.
    pub q: Option<Vec<Vec<T>>>,
    pub notes: Vec<String>,
}

impl<T: Scalar> Sheet<T> {
    pub fn shape(&self) -> (usize, usize) {
        (self.t1.len(), self.t2.len())
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.t2.len() + j
    }

    pub fn state(&self, i: usize, j: usize) -> &[T] {
        &self.x[self.node(i, j)]
    }

    /// Checks grid monotonicity and array shapes.
    pub fn check(&self, n: usize, controls: usize) -> Result<()> {
        for g in [&self.t1, &self.t2] {
            if g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Invalid("sheet grid is not strictly increasing".into()));
            }
        }
        let len = self.t1.len() * self.t2.len();
        let rows = |what: &str, r: &Vec<Vec<T>>, w: usize| -> Result<()> {
            if r.len() != len || r.iter().any(|v| v.len() != w) {
                return Err(Error::Invalid(format!("sheet {what} do not match a {len}-node grid of width {w}")));
            }
            Ok(())
        };
        rows("states", &self.x, n)?;
        rows("controls", &self.u, controls)?;
        if let Some(p) = &self.p {
            rows("costates", p, p.first().map_or(0, Vec::len))?;
        }
        Ok(())
    }

    /// Component `c` of a node field as a row-major `N1 × N2` grid.
    pub fn column(rows: &[Vec<T>], c: usize) -> Vec<T> {
        rows.iter().map(|r| r[c]).collect()
    }

    /// Second-order partials of a node field along `t1` and `t2`.
    pub fn partials(&self, values: &[T]) -> [Vec<T>; 2] {
        let (n1, n2) = self.shape();
        let mut d1 = vec![T::zero(); values.len()];
        let mut d2 = vec![T::zero(); values.len()];
        if n1 >= 2 {
            for j in 0..n2 {
                let col: Vec<T> = (0..n1).map(|i| values[i * n2 + j]).collect();
                for (i, v) in fd::deriv2_nonuniform(&self.t1, &col).into_iter().enumerate() {
                    d1[i * n2 + j] = v;
                }
            }
        }
        if n2 >= 2 {
            for i in 0..n1 {
                let row = &values[i * n2..(i + 1) * n2];
                d2[i * n2..(i + 1) * n2].copy_from_slice(&fd::deriv2_nonuniform(&self.t2, row));
            }
        }
        [d1, d2]
    }
}

/// Controls `u^a_α(t, x)` as expressions over `t1, t2` and the state.
#[derive(Debug, Clone)]
pub struct SheetControls {
    exprs: Vec<Vec<Expr>>,
    vars: Vars,
    n: usize,
    val: Vec<Vec<Compiled>>,
    // [α][a][β]
    d_t: Vec<Vec<Vec<Compiled>>>,
    // [α][a][i]
    d_x: Vec<Vec<Vec<Compiled>>>,
}

impl SheetControls {
    /// `exprs[α][a]`; exactly two parameters.
    pub fn new<S: AsRef<str>>(state: &[S], exprs: Vec<Vec<Expr>>) -> Result<SheetControls> {
        if exprs.len() != 2 {
            return Err(Error::Unsupported(format!("sheets with m = {}", exprs.len())));
        }
        crate::error::check_dim("sheet controls", exprs[0].len(), exprs[1].len())?;
        let mut vars = Vars::new(&TIME_NAMES);
        for s in state {
            vars.push(s.as_ref());
        }
        let n = state.len();
        let c = |e: &Expr| -> Result<Compiled> { Ok(e.compile(&vars)?) };
        let val = exprs.iter().map(|r| r.iter().map(c).collect()).collect::<Result<_>>()?;
        let d_t = exprs
            .iter()
            .map(|r| r.iter().map(|e| TIME_NAMES.iter().map(|t| c(&e.diff(t))).collect()).collect())
            .collect::<Result<_>>()?;
        let d_x = exprs
            .iter()
            .map(|r| r.iter().map(|e| state.iter().map(|s| c(&e.diff(s.as_ref()))).collect()).collect())
            .collect::<Result<_>>()?;
        Ok(SheetControls {
            exprs,
            vars,
            n,
            val,
            d_t,
            d_x,
        })
    }

    pub fn constant<S: AsRef<str>>(state: &[S], values: &[Vec<f64>]) -> Result<SheetControls> {
        SheetControls::new(state, values.iter().map(|r| r.iter().map(|&v| Expr::c(v)).collect()).collect())
    }

    /// Controls from the laws of a span-form problem, one per control name.
    pub fn from_problem(problem: &OCProblem) -> Result<SheetControls> {
        let k = match &problem.distribution {
            Distribution::Span { fields, .. } => fields.len(),
            Distribution::Kernel(_) => return Err(Error::Unsupported("sheet controls of a Pfaff graph".into())),
        };
        let mut exprs: [Vec<Expr>; 2] = [Vec::with_capacity(k), Vec::with_capacity(k)];
        for (idx, name) in problem.controls.iter().enumerate() {
            let law = problem
                .laws
                .get(name)
                .ok_or_else(|| Error::Invalid(format!("no law for control `{name}`")))?;
            exprs[idx / k.max(1)].push(law.clone());
        }
        SheetControls::new(&problem.state, exprs.into())
    }

    pub fn exprs(&self) -> &[Vec<Expr>] {
        &self.exprs
    }

    pub fn generators(&self) -> usize {
        self.exprs[0].len()
    }

    pub fn layout(&self) -> &Vars {
        &self.vars
    }

    fn slots(&self, t: [f64; 2], x: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(2 + self.n);
        z.extend_from_slice(&t);
        z.extend_from_slice(x);
        z
    }

    /// `u[α][a]` at `(t, x)`.
    pub fn eval(&self, t: [f64; 2], x: &[f64]) -> Result<Vec<Vec<f64>>> {
        crate::error::check_dim("state", self.n, x.len())?;
        let z = self.slots(t, x);
        self.val
            .iter()
            .map(|r| r.iter().map(|c| Ok(c.eval(&z)?)).collect())
            .collect()
    }
}

/// Complete-integrability residual per node,
/// `R_{αβ} = u^a_α u^b_β [X_a, X_b] − (D_β u^a_α − D_α u^a_β) X_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct CicResidual {
    pub n: usize,
    /// Per node, `R[α][β][j]` flattened.
    pub values: Vec<Vec<f64>>,
    pub sup: f64,
}

impl CicResidual {
    pub fn at(&self, node: usize, alpha: usize, beta: usize) -> &[f64] {
        let s = (alpha * 2 + beta) * self.n;
        &self.values[node][s..s + self.n]
    }

    /// `max |R_{αβ} + R_{βα}|`.
    pub fn antisymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.values.len() {
            for j in 0..self.n {
                worst = worst.max((self.at(k, 0, 1)[j] + self.at(k, 1, 0)[j]).abs());
                worst = worst.max(self.at(k, 0, 0)[j].abs()).max(self.at(k, 1, 1)[j].abs());
            }
        }
        worst
    }
}

struct Brackets {
    // [a][b][j]
    c: Vec<Vec<Vec<Compiled>>>,
}

impl Brackets {
    fn new(system: &ControlSystem) -> Result<Brackets> {
        let names: Vec<&str> = system.state().names().collect();
        let f = system.fields();
        let c = f
            .iter()
            .map(|xa| {
                f.iter()
                    .map(|xb| {
                        lie_bracket(xa, xb, &names)?
                            .components()
                            .iter()
                            .map(|e| Ok(e.compile(system.state())?))
                            .collect()
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Brackets { c })
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
        self.c
            .iter()
            .map(|r| r.iter().map(|b| b.iter().map(|e| Ok(e.eval(x)?)).collect()).collect())
            .collect()
    }
}

fn cic_tensor(u: &[Vec<f64>], du: &[Vec<[f64; 2]>], xv: &[Vec<f64>], br: &[Vec<Vec<f64>>], n: usize) -> Vec<f64> {
    let k = u[0].len();
    let mut r = vec![0.0; 4 * n];
    for al in 0..2 {
        for be in 0..2 {
            let out = &mut r[(al * 2 + be) * n..(al * 2 + be + 1) * n];
            for a in 0..k {
                for b in 0..k {
                    let w = u[al][a] * u[be][b];
                    if w != 0.0 {
                        for j in 0..n {
                            out[j] += w * br[a][b][j];
                        }
                    }
                }
                let skew = du[al][a][be] - du[be][a][al];
                for j in 0..n {
                    out[j] -= skew * xv[a][j];
                }
            }
        }
    }
    r
}

fn finish(n: usize, values: Vec<Vec<f64>>) -> CicResidual {
    let sup = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    CicResidual { n, values, sup }
}

/// CIC residual of symbolic controls at the given `(t, x)` points, with
/// total derivatives `D_β u = ∂_β u + ∂_x u · u^b_β X_b`.
pub fn cic_residual(system: &ControlSystem, controls: &SheetControls, points: &[([f64; 2], Vec<f64>)]) -> Result<CicResidual> {
    let n = system.dim();
    let k = system.generators();
    crate::error::check_dim("sheet controls", k, controls.generators())?;
    let br = Brackets::new(system)?;
    let mut values = Vec::with_capacity(points.len());
    for (t, x) in points {
        let u = controls.eval(*t, x)?;
        let xv = system.field_values(x)?;
        let z = controls.slots(*t, x);
        let vel: Vec<Vec<f64>> = (0..2)
            .map(|be| (0..n).map(|i| (0..k).map(|b| u[be][b] * xv[b][i]).sum()).collect())
            .collect();
        let mut du = vec![vec![[0.0; 2]; k]; 2];
        for al in 0..2 {
            for a in 0..k {
                for be in 0..2 {
                    let mut d = controls.d_t[al][a][be].eval(&z)?;
                    for i in 0..n {
                        d += controls.d_x[al][a][i].eval(&z)? * vel[be][i];
                    }
                    du[al][a][be] = d;
                }
            }
        }
        values.push(cic_tensor(&u, &du, &xv, &br.eval(x)?, n));
    }
    Ok(finish(n, values))
}

/// CIC residual from node values stored on a sheet; control derivatives
/// by second-order finite differences along the grid.
pub fn cic_residual_sheet(system: &ControlSystem, sheet: &Sheet<f64>) -> Result<CicResidual> {
    let n = system.dim();
    let k = system.generators();
    sheet.check(n, 2 * k)?;
    let br = Brackets::new(system)?;
    let parts: Vec<[Vec<f64>; 2]> = (0..2 * k).map(|c| sheet.partials(&Sheet::column(&sheet.u, c))).collect();
    let mut values = Vec::with_capacity(sheet.x.len());
    for (node, x) in sheet.x.iter().enumerate() {
        let u: Vec<Vec<f64>> = (0..2).map(|al| sheet.u[node][al * k..(al + 1) * k].to_vec()).collect();
        let du: Vec<Vec<[f64; 2]>> = (0..2)
            .map(|al| (0..k).map(|a| [parts[al * k + a][0][node], parts[al * k + a][1][node]]).collect())
            .collect();
        values.push(cic_tensor(&u, &du, &system.field_values(x)?, &br.eval(x)?, n));
    }
    Ok(finish(n, values))
}

/// Staircase order for sheet integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Along `t1` at `t2 = t2[0]`, then along `t2` for every `t1` node.
    T1First,
    T2First,
}

/// RK4 leg along parameter `axis`, the other parameter fixed at `other`.
pub(crate) fn leg<F>(mut rhs: F, axis: usize, other: f64, grid: &[f64], start: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: FnMut([f64; 2], &[f64], &mut [f64]) -> Result<()>,
{
    let mut y = start.to_vec();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y.clone());
    let mut work = Rk4Work::new(y.len());
    let at = |s: f64| if axis == 0 { [s, other] } else { [other, s] };
    for w in grid.windows(2) {
        let mut f = |s: f64, y: &[f64], o: &mut [f64]| rhs(at(s), y, o);
        rk4_step(&mut f, w[0], &mut y, w[1] - w[0], &mut work)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sheet leg at t{} = {}", axis + 1, w[1])));
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Staircase RK4 integration of a two-parameter field equation; returns
/// node values laid out row-major over `(t1, t2)`.
pub(crate) fn staircase<F>(mut rhs: F, start: &[f64], t1: &[f64], t2: &[f64], order: Order) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(usize, [f64; 2], &[f64], &mut [f64]) -> Result<()>,
{
    let (n1, n2) = (t1.len(), t2.len());
    let mut nodes = vec![Vec::new(); n1 * n2];
    match order {
        Order::T1First => {
            let first = leg(|t, y, o| rhs(0, t, y, o), 0, t2[0], t1, start)?;
            for (i, s) in first.into_iter().enumerate() {
                let col = leg(|t, y, o| rhs(1, t, y, o), 1, t1[i], t2, &s)?;
                for (j, v) in col.into_iter().enumerate() {
                    nodes[i * n2 + j] = v;
                }
            }
        }
        Order::T2First => {
            let first = leg(|t, y, o| rhs(1, t, y, o), 1, t1[0], t2, start)?;
            for (j, s) in first.into_iter().enumerate() {
                let row = leg(|t, y, o| rhs(0, t, y, o), 0, t2[j], t1, &s)?;
                for (i, v) in row.into_iter().enumerate() {
                    nodes[i * n2 + j] = v;
                }
            }
        }
    }
    Ok(nodes)
}

/// Integrates `∂_α x = u^a_α(t, x) X_a(x)` over the grid by a staircase of
/// RK4 legs. A note is attached when the CIC residual at the nodes
/// exceeds [`CIC_WARN`].
pub fn integrate_sheet(
    system: &ControlSystem,
    controls: &SheetControls,
    x0: &[f64],
    t1: &[f64],
    t2: &[f64],
    order: Order,
) -> Result<Sheet<f64>> {
    let n = system.dim();
    crate::error::check_dim("initial state", n, x0.len())?;
    crate::error::check_dim("sheet controls", system.generators(), controls.generators())?;
    if t1.is_empty() || t2.is_empty() {
        return Ok(Sheet::default());
    }
    let x = staircase(
        |al, t, y, o| {
            let u = controls.eval(t, y)?;
            system.velocity(y, &u[al], o)
        },
        x0,
        t1,
        t2,
        order,
    )?;
    let mut sheet = Sheet {
        t1: t1.to_vec(),
        t2: t2.to_vec(),
        x,
        ..Default::default()
    };
    let mut points = Vec::with_capacity(sheet.x.len());
    for i in 0..t1.len() {
        for j in 0..t2.len() {
            let xs = sheet.state(i, j).to_vec();
            let u = controls.eval([t1[i], t2[j]], &xs)?;
            sheet.u.push(u.concat());
            points.push(([t1[i], t2[j]], xs));
        }
    }
    let cic = cic_residual(system, controls, &points)?;
    if cic.sup > CIC_WARN {
        sheet.notes.push(format!(
            "CIC residual {:e} exceeds {CIC_WARN:e}; the sheet depends on the integration order",
            cic.sup
        ));
    }
    Ok(sheet)
}

/// Criticality residual of a curvilinear functional along a parameter
/// curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Criticality {
    pub tau: Vec<f64>,
    /// `r_α(τ) = (D_α L_β − D_β L_α) ṫ^β` per sample.
    pub r: Vec<Vec<f64>>,
    pub sup: f64,
}

/// `r_α = (∂_α L_β − ∂_β L_α)(t(τ)) ṫ^β(τ)` at `steps + 1` samples, for
/// forms `L_α` depending on the parameters `times` only.
pub fn curve_criticality_residual<S: AsRef<str>>(
    l: &[Expr],
    times: &[S],
    curve: &Curve,
    steps: usize,
) -> Result<Criticality> {
    let m = l.len();
    crate::error::check_dim("curvilinear forms", times.len(), m)?;
    crate::error::check_dim("curve", m, curve.dim())?;
    let vars = Vars::new(times);
    for e in l {
        if let Some(v) = e.free_vars().into_iter().find(|v| !vars.contains(v)) {
            return Err(Error::Unsupported(format!("form depends on `{v}`; only the parameters are allowed")));
        }
    }
    let mat = (0..m)
        .map(|al| {
            (0..m)
                .map(|be| {
                    let e = (l[be].diff(times[al].as_ref()) - l[al].diff(times[be].as_ref())).simplify();
                    Ok(e.compile(&vars)?)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (tau, pos, vel) = curve.samples(steps)?;
    let mut r = Vec::with_capacity(tau.len());
    let mut sup = 0.0f64;
    for (p, v) in pos.iter().zip(&vel) {
        let row = (0..m)
            .map(|al| {
                let mut s = 0.0;
                for be in 0..m {
                    s += mat[al][be].eval(p)? * v[be];
                }
                Ok(s)
            })
            .collect::<Result<Vec<f64>>>()?;
        sup = row.iter().fold(sup, |a, b| a.max(b.abs()));
        r.push(row);
    }
    Ok(Criticality { tau, r, sup })
}

/// Residuals of the multitime necessary conditions along a sheet.
///
/// Span form, with Hamiltonian forms `H_α = L_α + p_i u^a_α X^i_a`:
/// `dynamics` (∂_α x = u^a_α X_a), `adjoint` (∂_α p = −∂_x H_α),
/// `stationarity` (∂H_β/∂u^a_α = 0) and `boundary` (initial state, fixed
/// terminal components at the far corner). Pfaff graphs are delegated to
/// [`GraphSystem::residuals`].
pub fn check_sheet(problem: &OCProblem, sheet: &Sheet<f64>) -> Result<ResidualReport> {
    if let Distribution::Kernel(_) = problem.distribution {
        let gs = graph_system(problem)?;
        return gs.residuals(sheet);
    }
    let fields = match &problem.distribution {
        Distribution::Span { fields, .. } => fields,
        Distribution::Kernel(_) => unreachable!(),
    };
    if problem.m != 2 {
        return Err(Error::Unsupported(format!("sheets with m = {}", problem.m)));
    }
    let n = problem.n();
    let k = fields.len();
    sheet.check(n, 2 * k)?;
    let costate: Vec<String> = problem.state.iter().map(|s| format!("p_{s}")).collect();
    let mut vars = Vars::new(&TIME_NAMES);
    for s in problem.state.iter().chain(&problem.controls).chain(&costate) {
        vars.push(s);
    }
    let ls: Vec<Expr> = match &problem.cost.kind {
        CostKind::Curvilinear(ls) => ls.iter().map(|l| (Expr::c(problem.sense.sign()) * l.clone()).simplify()).collect(),
        _ => vec![Expr::zero(), Expr::zero()],
    };
    let h: Vec<Expr> = (0..2)
        .map(|al| {
            let mut terms = vec![ls[al].clone()];
            for (a, f) in fields.iter().enumerate() {
                let u = Expr::var(&problem.controls[al * k + a]);
                for (i, c) in f.components().iter().enumerate() {
                    if !c.is_zero() {
                        terms.push(Expr::var(&costate[i]) * u.clone() * c.clone());
                    }
                }
            }
            Expr::sum(terms).simplify()
        })
        .collect();
    let c = |e: &Expr| -> Result<Compiled> { Ok(e.compile(&vars)?) };
    let h_x: Vec<Vec<Compiled>> = h
        .iter()
        .map(|e| problem.state.iter().map(|s| c(&e.diff(s))).collect())
        .collect::<Result<_>>()?;
    let h_p: Vec<Vec<Compiled>> = h.iter().map(|e| costate.iter().map(|s| c(&e.diff(s))).collect()).collect::<Result<_>>()?;
    let h_u: Vec<Vec<Compiled>> = h
        .iter()
        .map(|e| problem.controls.iter().map(|s| c(&e.diff(s))).collect())
        .collect::<Result<_>>()?;

    let zero_p = vec![vec![0.0; n]; sheet.x.len()];
    let p = sheet.p.as_ref().unwrap_or(&zero_p);
    let xd: Vec<[Vec<f64>; 2]> = (0..n).map(|i| sheet.partials(&Sheet::column(&sheet.x, i))).collect();
    let pd: Vec<[Vec<f64>; 2]> = (0..n).map(|i| sheet.partials(&Sheet::column(p, i))).collect();
    let (mut dynamics, mut adjoint, mut stationarity) = (0.0f64, 0.0f64, 0.0f64);
    for node in 0..sheet.x.len() {
        let (i, j) = (node / sheet.t2.len(), node % sheet.t2.len());
        let mut z = vec![sheet.t1[i], sheet.t2[j]];
        z.extend_from_slice(&sheet.x[node]);
        z.extend_from_slice(&sheet.u[node]);
        z.extend_from_slice(&p[node]);
        for al in 0..2 {
            for s in 0..n {
                dynamics = dynamics.max((xd[s][al][node] - h_p[al][s].eval(&z)?).abs());
                if sheet.p.is_some() {
                    adjoint = adjoint.max((pd[s][al][node] + h_x[al][s].eval(&z)?).abs());
                }
            }
            if sheet.p.is_some() {
                for cu in &h_u[al] {
                    stationarity = stationarity.max(cu.eval(&z)?.abs());
                }
            }
        }
    }
    let mut report = ResidualReport::default();
    report.insert("dynamics", dynamics);
    if sheet.p.is_some() {
        report.insert("adjoint", adjoint);
        report.insert("stationarity", stationarity);
    }
    let mut boundary = 0.0f64;
    if let Some(first) = sheet.x.first() {
        for (i, v) in problem.boundary.x0.iter().enumerate() {
            if let Some(v) = v {
                boundary = boundary.max((first[i] - v).abs());
            }
        }
        if let (Some(x1), Some(last)) = (&problem.boundary.x1, sheet.x.last()) {
            for (i, v) in x1.iter().enumerate() {
                if let Some(v) = v {
                    boundary = boundary.max((last[i] - v).abs());
                }
            }
        }
    }
    report.insert("boundary", boundary);
    Ok(report)
}
