use crate::expr::{Compiled, Expr, Vars};
use crate::geometry::{ControlSystem, Distribution};
use crate::num::linspace;
use crate::ocp::{CostKind, OCProblem, Sense};
use crate::quad::simpson_samples;
use crate::{Error, Result};

use super::{integrate_sheet, staircase, Order, Sheet, SheetControls, TIME_NAMES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiBangOptions {
    /// Grid nodes per side.
    pub nodes: usize,
    /// Tolerance on fixed terminal components.
    pub tol: f64,
}

impl Default for MultiBangOptions {
    fn default() -> Self {
        MultiBangOptions { nodes: 51, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexCandidate {
    /// `u[α][a]`.
    pub controls: Vec<Vec<f64>>,
    pub objective: f64,
    /// Sup distance of the far corner to the fixed terminal components.
    pub miss: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct MultiBang {
    pub sheet: Sheet<f64>,
    pub controls: Vec<Vec<f64>>,
    pub objective: f64,
    pub candidates: Vec<VertexCandidate>,
}

/// Vertex controls `u_1 ∈ ∂U`, `u_2 = ±u_1` (constant over the rectangle),
/// enumerated lower-bound first with `+` before `−`.
fn vertices(problem: &OCProblem, k: usize) -> Vec<Vec<Vec<f64>>> {
    let b = &problem.bounds;
    let mut out = Vec::new();
    for mask in 0..(1usize << k) {
        let u1: Vec<f64> = (0..k)
            .map(|a| if mask >> a & 1 == 0 { b.lower[a] } else { b.upper[a] })
            .collect();
        for s in [1.0, -1.0] {
            let u2: Vec<f64> = u1.iter().map(|v| s * v).collect();
            if b.contains(&[u1.clone(), u2.clone()].concat()) {
                let c = vec![u1.clone(), u2];
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Bang-bang search over constant vertex controls of a two-parameter
/// span problem on the rectangle horizon.
///
/// Objectives: `terminal` (payoff at the far corner) or `multiple`
/// (double integral of `L(t, x, u)` by Simpson), plus any terminal term.
/// The costate of a terminal objective is integrated back from the far
/// corner and switching values `Q^α_a = −p_i X^i_a` are recorded.
pub fn multitime_bang(problem: &OCProblem, opts: &MultiBangOptions) -> Result<MultiBang> {
    let fields = match &problem.distribution {
        Distribution::Span { fields, .. } => fields.clone(),
        Distribution::Kernel(_) => return Err(Error::Unsupported("multitime bang-bang on a Pfaff form".into())),
    };
    if problem.m != 2 {
        return Err(Error::Unsupported(format!("multitime bang-bang with m = {}", problem.m)));
    }
    let diags = problem.validate();
    if !diags.is_empty() {
        return Err(Error::Invalid(
            diags.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "),
        ));
    }
    let k = fields.len();
    if (0..2 * k).any(|a| !problem.bounds.is_bounded(a)) {
        return Err(Error::Invalid("multitime bang-bang needs a bounded control box".into()));
    }
    let sides = match &problem.horizon {
        crate::ocp::Horizon::Rectangle(r) => [r[0], r[1]],
        crate::ocp::Horizon::Interval(..) => return Err(Error::Invalid("rectangle horizon required".into())),
    };
    if sides.contains(&0.0) {
        return Ok(MultiBang {
            sheet: Sheet::default(),
            controls: Vec::new(),
            objective: 0.0,
            candidates: Vec::new(),
        });
    }
    let system = ControlSystem::new(&problem.state, fields)?;
    let x0 = problem.boundary.x0_or(0.0);
    let nodes = opts.nodes.max(3) | 1;
    let t1 = linspace(0.0, sides[0], nodes - 1);
    let t2 = linspace(0.0, sides[1], nodes - 1);

    let mut vars = Vars::new(&TIME_NAMES);
    for s in problem.state.iter().chain(&problem.controls) {
        vars.push(s);
    }
    let compile = |e: &Expr| -> Result<Compiled> { Ok(e.compile(&vars)?) };
    let (running, terminal) = match (&problem.cost.kind, &problem.cost.terminal) {
        (CostKind::Terminal(g), extra) => (None, Some(extra.as_ref().map_or_else(|| g.clone(), |e| g + e))),
        (CostKind::MultipleIntegral(l), extra) => (Some(l.clone()), extra.clone()),
        _ => return Err(Error::Unsupported("multitime bang-bang objective must be terminal or multiple".into())),
    };
    let running_c = running.as_ref().map(compile).transpose()?;
    let terminal_c = terminal.as_ref().map(compile).transpose()?;

    let evaluate = |sheet: &Sheet<f64>| -> Result<f64> {
        let mut total = 0.0;
        if let Some(c) = &running_c {
            let (n1, n2) = sheet.shape();
            let mut rows = Vec::with_capacity(n1);
            for i in 0..n1 {
                let row = (0..n2)
                    .map(|j| {
                        let node = sheet.node(i, j);
                        let z = [&[sheet.t1[i], sheet.t2[j]][..], &sheet.x[node], &sheet.u[node]].concat();
                        Ok(c.eval(&z)?)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                rows.push(simpson_samples(&row, t2[1] - t2[0]));
            }
            total += simpson_samples(&rows, t1[1] - t1[0]);
        }
        if let Some(c) = &terminal_c {
            let last = sheet.x.len() - 1;
            let z = [&sides[..], &sheet.x[last], &sheet.u[last]].concat();
            total += c.eval(&z)?;
        }
        Ok(total)
    };

    let mut candidates: Vec<VertexCandidate> = Vec::new();
    let mut best: Option<(usize, Sheet<f64>)> = None;
    for u in vertices(problem, k) {
        let controls = SheetControls::constant(&problem.state, &u)?;
        let sheet = integrate_sheet(&system, &controls, &x0, &t1, &t2, Order::T1First)?;
        let objective = evaluate(&sheet)?;
        let last = sheet.x.last().expect("nonempty sheet");
        let miss = problem.boundary.x1.as_ref().map_or(0.0, |x1| {
            x1.iter()
                .zip(last)
                .filter_map(|(t, v)| t.map(|t| (t - v).abs()))
                .fold(0.0, f64::max)
        });
        let feasible = miss <= opts.tol;
        let better = |o: f64, b: f64| match problem.sense {
            Sense::Minimize => o < b,
            Sense::Maximize => o > b,
        };
        if feasible && best.as_ref().is_none_or(|(i, _)| better(objective, candidates[*i].objective)) {
            best = Some((candidates.len(), sheet));
        }
        candidates.push(VertexCandidate {
            controls: u,
            objective,
            miss,
            feasible,
        });
    }
    let (idx, mut sheet) = best.ok_or_else(|| Error::Invalid("no feasible vertex control".into()))?;
    let controls = candidates[idx].controls.clone();

    if let Some(g) = &terminal {
        let canon = (Expr::c(problem.sense.sign()) * g.clone()).simplify();
        let grad: Vec<Compiled> = problem.state.iter().map(|s| compile(&canon.diff(s))).collect::<Result<_>>()?;
        let last = sheet.x.len() - 1;
        let z = [&sides[..], &sheet.x[last], &sheet.u[last]].concat();
        let p1: Vec<f64> = grad.iter().map(|c| Ok(c.eval(&z)?)).collect::<Result<_>>()?;
        let n = problem.n();
        let rev1: Vec<f64> = t1.iter().rev().copied().collect();
        let rev2: Vec<f64> = t2.iter().rev().copied().collect();
        let start = [&sheet.x[last][..], &p1[..]].concat();
        let joint = staircase(
            |al, _, y, o| {
                let (x, p) = y.split_at(n);
                let (ox, op) = o.split_at_mut(n);
                system.velocity(x, &controls[al], ox)?;
                system.adjoint_rhs(x, p, &controls[al], None, op)
            },
            &start,
            &rev1,
            &rev2,
            Order::T2First,
        )?;
        let (n1, n2) = sheet.shape();
        let mut ps = vec![Vec::new(); n1 * n2];
        let mut qs = vec![Vec::new(); n1 * n2];
        for ri in 0..n1 {
            for rj in 0..n2 {
                let node = sheet.node(n1 - 1 - ri, n2 - 1 - rj);
                let p = joint[ri * n2 + rj][n..].to_vec();
                let q: Vec<f64> = system.switching(&sheet.x[node], &p)?.iter().map(|v| -v).collect();
                qs[node] = [q.clone(), q].concat();
                ps[node] = p;
            }
        }
        sheet.p = Some(ps);
        sheet.q = Some(qs);
    }
    Ok(MultiBang {
        sheet,
        controls,
        objective: candidates[idx].objective,
        candidates,
    })
}
