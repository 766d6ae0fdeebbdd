use std::path::PathBuf;

use nonholo::bang::{terminal_value_bang, time_optimal_shoot, BangOptions, SwitchingProfile};
use nonholo::curve::Curve;
use nonholo::geometry::{frobenius_coefficient, frobenius_verdict, lie_bracket, ControlSystem, Distribution, VectorField};
use nonholo::multitime::{
    cic_residual, cic_residual_sheet, graph_system, integrate_sheet, multitime_bang, GraphSystem, MultiBangOptions, Order, Sheet,
    SheetControls,
};
use nonholo::ocp::{CostKind, Horizon, OCProblem};
use nonholo::pmp::{build_hamiltonian, check_extremal, shoot, ResidualReport, ShootOptions};
use nonholo::riemann::{christoffel, criticality_residual, field_line, geodesic_field_residual, length, sinusoidal_perturbations, work};
use nonholo::sample::cloud;
use nonholo::{Trajectory, Vars};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::output::{sheet_csv, trajectory_csv, Table};
use crate::problem::{LoadError, ProblemFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    NoConv,
    Invalid,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NoConv => 2,
            Status::Invalid => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NoConv => "noconv",
            Status::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nonholo::Error),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{0}")]
    Usage(String),
    #[error("candidate: {0}")]
    Candidate(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn status(&self) -> Status {
        use nonholo::Error as E;
        match self {
            CliError::Core(E::Stationarity { .. } | E::Singular { .. } | E::NonFinite(_) | E::AllSingular { .. } | E::Eval(_)) => {
                Status::NoConv
            }
            _ => Status::Invalid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Check,
    Bang,
    Sheet,
    Geometry,
    Riemann,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Check => "check",
            Command::Bang => "bang",
            Command::Sheet => "sheet",
            Command::Geometry => "geometry",
            Command::Riemann => "riemann",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub candidate: Option<PathBuf>,
    pub frobenius: bool,
    pub cic: bool,
}

/// What one command produced for one problem file.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub status: Status,
    pub summary: String,
    pub csv: Option<String>,
    pub json: Value,
}

const CHECK_TOL: f64 = 1e-8;
const SHEET_NODES: usize = 51;

pub fn run(cmd: Command, file: &ProblemFile, flags: &Flags) -> Result<Artifacts, CliError> {
    let mut art = match cmd {
        Command::Solve => solve(file, flags),
        Command::Check => check(file, flags),
        Command::Bang => bang(file, flags),
        Command::Sheet => sheet(file, flags),
        Command::Geometry => geometry(file, flags),
        Command::Riemann => riemann(file, flags),
    }?;
    if let Value::Object(m) = &mut art.json {
        m.insert("command".into(), json!(cmd.as_str()));
        m.insert("problem".into(), json!(file.name));
        m.insert("status".into(), json!(art.status.as_str()));
    }
    Ok(art)
}

fn problem(file: &ProblemFile) -> Result<&OCProblem, CliError> {
    file.problem
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs a [dynamics] section".into()))
}

fn report_json(r: &ResidualReport) -> Value {
    Value::Object(r.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn ok_if(done: bool) -> Status {
    if done {
        Status::Ok
    } else {
        Status::NoConv
    }
}

fn tol(file: &ProblemFile, flags: &Flags) -> Option<f64> {
    flags.tol.or(file.solver.tol)
}

fn steps(file: &ProblemFile, flags: &Flags) -> Option<usize> {
    flags.grid.or(file.solver.steps)
}

fn nodes(file: &ProblemFile, flags: &Flags) -> usize {
    flags.grid.or(file.solver.nodes).unwrap_or(SHEET_NODES).max(2)
}

fn span_fields(p: &OCProblem) -> Option<&[VectorField]> {
    match &p.distribution {
        Distribution::Span { fields, .. } => Some(fields),
        Distribution::Kernel(_) => None,
    }
}

fn solve(file: &ProblemFile, flags: &Flags) -> Result<Artifacts, CliError> {
    let p = problem(file)?;
    match (p.m, &p.distribution) {
        (1, _) if matches!(p.cost.kind, CostKind::Time) => bang(file, flags),
        (1, _) => shoot_single(file, p, flags),
        (2, Distribution::Kernel(_)) => graph_solve(file, p, flags),
        (2, Distribution::Span { .. }) => bang(file, flags),
        (m, _) => Err(CliError::Core(nonholo::Error::Unsupported(format!("problems with m = {m}")))),
    }
}

fn shoot_single(file: &ProblemFile, p: &OCProblem, flags: &Flags) -> Result<Artifacts, CliError> {
    let mut opts = ShootOptions::default();
    if let Some(s) = steps(file, flags) {
        opts.steps_per_unit = s.max(1);
    }
    if let Some(t) = tol(file, flags) {
        opts.newton.tol = t;
    }
    if let Some(it) = file.solver.max_iter {
        opts.newton.max_iter = it;
    }
    opts.guess = file.solver.guess.clone();
    let out = shoot(p, &opts)?;
    let hd = build_hamiltonian(p)?;
    let csv = trajectory_csv(&out.trajectory, &p.state, &hd.controls, &p.state);
    let json = json!({
        "converged": out.converged,
        "iterations": out.iterations,
        "boundary_residual": out.residual,
        "condition": out.condition,
        "residuals": report_json(&out.report),
        "notes": out.trajectory.notes,
    });
    Ok(Artifacts {
        status: ok_if(out.converged),
        summary: format!(
            "shoot {} after {} iterations, boundary residual {:e}, max residual {:e}",
            if out.converged { "converged" } else { "did not converge" },
            out.iterations,
            out.residual,
            out.report.max()
        ),
        csv: Some(csv),
        json,
    })
}

fn rectangle(p: &OCProblem) -> Vec<f64> {
    match &p.horizon {
        Horizon::Rectangle(r) => r.clone(),
        Horizon::Interval(a, b) => vec![b - a; 2],
    }
}

fn graph_grids(p: &OCProblem, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let r = rectangle(p);
    let x0 = p.boundary.x0_or(0.0);
    (
        nonholo::num::linspace(x0[0], x0[0] + r[0], nodes - 1),
        nonholo::num::linspace(x0[1], x0[1] + r[1], nodes - 1),
    )
}

fn graph_solve(file: &ProblemFile, p: &OCProblem, flags: &Flags) -> Result<Artifacts, CliError> {
    let gs = graph_system(p)?;
    let sup = gs.integrability_sup(flags.seed)?;
    let integrable = gs.is_integrable(flags.seed)?;
    let x0 = p.boundary.x0_or(0.0);
    let p0 = file.solver.guess.as_ref().and_then(|g| g.first().copied()).unwrap_or(0.0);
    let law: Vec<String> = gs.law.iter().map(|e| e.to_string()).collect();
    if integrable {
        let (g1, g2) = graph_grids(p, nodes(file, flags));
        let sheet = gs.integrate_sheet(x0[2], p0, &g1, &g2, Order::T1First)?;
        let report = gs.residuals(&sheet)?;
        let csv = sheet_csv(&sheet, &p.state, &gs.controls, std::slice::from_ref(&gs.costate));
        Ok(Artifacts {
            status: Status::Ok,
            summary: format!("integrable branch: evolution surface over a {}x{} grid, max residual {:e}", g1.len(), g2.len(), report.max()),
            csv: Some(csv),
            json: json!({
                "branch": "surface",
                "integrability_sup": sup,
                "control_law": law,
                "residuals": report_json(&report),
                "notes": sheet.notes,
            }),
        })
    } else {
        let r = rectangle(p);
        let path = Curve::straight(&x0[..2], &[x0[0] + r[0], x0[1] + r[1]])?;
        let tr = gs.integrate_curve(&path, x0[2], p0, steps(file, flags).unwrap_or(1000))?;
        let csv = trajectory_csv(&tr, &p.state, &gs.controls, &["z".to_string()]);
        Ok(Artifacts {
            status: Status::Ok,
            summary: format!("non-integrable branch (integrability defect {sup:e}): evolution along the diagonal curve"),
            csv: Some(csv),
            json: json!({
                "branch": "curve",
                "integrability_sup": sup,
                "control_law": law,
                "notes": tr.notes,
            }),
        })
    }
}

fn candidate_trajectory(t: &Table, state: &[String], controls: &[String]) -> Result<Trajectory, String> {
    let col = t.column("t")?;
    let p_names: Vec<String> = state.iter().map(|s| format!("p_{s}")).collect();
    let mut tr = Trajectory::default();
    tr.t = t.rows.iter().map(|r| r[col]).collect();
    tr.x = t.select(state)?;
    tr.u = t.select(controls)?;
    tr.p = t.select(&p_names)?;
    Ok(tr)
}

fn candidate_sheet(t: &Table, state: &[String], controls: &[String]) -> Result<Sheet<f64>, String> {
    let (c1, c2) = (t.column("t1")?, t.column("t2")?);
    let mut t1: Vec<f64> = Vec::new();
    let mut t2: Vec<f64> = Vec::new();
    for r in &t.rows {
        if !t1.contains(&r[c1]) {
            t1.push(r[c1]);
        }
        if !t2.contains(&r[c2]) {
            t2.push(r[c2]);
        }
    }
    if t1.len() * t2.len() != t.rows.len() {
        return Err("sheet rows do not form a full grid".into());
    }
    for (node, r) in t.rows.iter().enumerate() {
        if r[c1] != t1[node / t2.len()] || r[c2] != t2[node % t2.len()] {
            return Err("sheet rows must be ordered t1-major".into());
        }
    }
    let p_cols: Vec<String> = t.header.iter().filter(|h| h.starts_with("p_")).cloned().collect();
    Ok(Sheet {
        t1,
        t2,
        x: t.select(state)?,
        u: t.select(controls)?,
        p: if p_cols.is_empty() { None } else { Some(t.select(&p_cols)?) },
        q: None,
        notes: Vec::new(),
    })
}

fn check(file: &ProblemFile, flags: &Flags) -> Result<Artifacts, CliError> {
    let p = problem(file)?;
    let path = flags
        .candidate
        .as_ref()
        .ok_or_else(|| CliError::Usage("check needs --candidate FILE".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let table = Table::parse(&text).map_err(CliError::Candidate)?;
    let report = if p.m == 1 {
        let hd = build_hamiltonian(p)?;
        let tr = candidate_trajectory(&table, &p.state, &hd.controls).map_err(CliError::Candidate)?;
        check_extremal(p, &tr)?
    } else {
        let controls = match &p.distribution {
            Distribution::Kernel(_) => graph_system(p)?.controls,
            Distribution::Span { .. } => p.controls.clone(),
        };
        let sheet = candidate_sheet(&table, &p.state, &controls).map_err(CliError::Candidate)?;
        nonholo::multitime::check_sheet(p, &sheet)?
    };
    let limit = tol(file, flags).unwrap_or(CHECK_TOL);
    let pass = report.max() <= limit;
    let entries: Vec<String> = report.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
    Ok(Artifacts {
        status: ok_if(pass),
        summary: format!(
            "{} rows checked, {} (tolerance {limit:e}): {}",
            table.rows.len(),
            if pass { "all residuals within tolerance" } else { "residuals exceed tolerance" },
            entries.join(" ")
        ),
        csv: None,
        json: json!({ "tolerance": limit, "residuals": report_json(&report) }),
    })
}

fn profile_json(p: &SwitchingProfile) -> Value {
    json!({ "switches": p.switches, "singular_fraction": p.singular_fraction })
}

fn bang(file: &ProblemFile, flags: &Flags) -> Result<Artifacts, CliError> {
    let p = problem(file)?;
    if p.m == 2 {
        return multibang(file, p, flags);
    }
    let mut opts = BangOptions::default();
    if let Some(s) = steps(file, flags) {
        opts.steps_per_unit = s.max(1);
    }
    if let Some(n) = file.solver.nodes {
        opts.nodes = n.max(2);
    }
    if let Some(e) = file.solver.eps {
        opts.eps = e;
    }
    if let Some(t) = tol(file, flags) {
        opts.newton.tol = t;
    }
    match p.cost.kind {
        CostKind::Time => {
            let r = time_optimal_shoot(p, &opts)?;
            Ok(Artifacts {
                status: ok_if(r.converged),
                summary: format!("minimum time {:.12} ({}), terminal miss {:e}", r.tau, conv(r.converged), r.miss),
                csv: Some(trajectory_csv(&r.trajectory, &p.state, &p.controls, &p.state)),
                json: json!({
                    "tau": r.tau,
                    "converged": r.converged,
                    "miss": r.miss,
                    "switching": profile_json(&r.profile),
                    "notes": r.trajectory.notes,
                }),
            })
        }
        CostKind::Terminal(_) => {
            let r = terminal_value_bang(p, &opts)?;
            Ok(Artifacts {
                status: ok_if(r.converged),
                summary: format!("terminal value {:.12} ({})", r.value, conv(r.converged)),
                csv: Some(trajectory_csv(&r.trajectory, &p.state, &p.controls, &p.state)),
                json: json!({
                    "value": r.value,
                    "converged": r.converged,
                    "iterations": r.iterations,
                    "switching": profile_json(&r.profile),
                    "notes": r.trajectory.notes,
                }),
            })
        }
        _ => Err(CliError::Usage("bang needs a time or terminal cost".into())),
    }
}

fn conv(ok: bool) -> &'static str {
    if ok {
        "converged"
    } else {
        "not converged"
    }
}

fn multibang(file: &ProblemFile, p: &OCProblem, flags: &Flags) -> Result<Artifacts, CliError> {
    let mut opts = MultiBangOptions::default();
    opts.nodes = nodes(file, flags);
    if let Some(t) = tol(file, flags) {
        opts.tol = t;
    }
    let r = multitime_bang(p, &opts)?;
    let candidates: Vec<Value> = r
        .candidates
        .iter()
        .map(|c| json!({ "controls": c.controls, "objective": c.objective, "miss": c.miss, "feasible": c.feasible }))
        .collect();
    let costate: Vec<String> = p.state.iter().map(|s| format!("p_{s}")).collect();
    Ok(Artifacts {
        status: Status::Ok,
        summary: format!("best vertex control {:?}, objective {:.12}", r.controls, r.objective),
        csv: Some(sheet_csv(&r.sheet, &p.state, &p.controls, &costate)),
        json: json!({
            "controls": r.controls,
            "objective": r.objective,
            "candidates": candidates,
            "notes": r.sheet.notes,
        }),
    })
}

fn span_system(p: &OCProblem) -> Result<ControlSystem, CliError> {
    let fields = span_fields(p).ok_or_else(|| CliError::Usage("this command needs span dynamics (field = ...)".into()))?;
    Ok(ControlSystem::new(&p.state, fields.to_vec())?)
}

fn sample_points(n: usize, seed: u64) -> Vec<([f64; 2], Vec<f64>)> {
    cloud(n + 2, nonholo::sample::CLOUD_SIZE, seed)
        .into_iter()
        .map(|z| ([z[0], z[1]], z[2..].to_vec()))
        .collect()
}

fn sheet(file: &ProblemFile, flags: &Flags) -> Result<Artifacts, CliError> {
    let p = problem(file)?;
    if p.m != 2 {
        return Err(CliError::Usage("sheet needs a problem with m = 2".into()));
    }
    if let Distribution::Kernel(_) = p.distribution {
        let gs: GraphSystem = graph_system(p)?;
        let (g1, g2) = graph_grids(p, nodes(file, flags));
        let x0 = p.boundary.x0_or(0.0);
        let p0 = file.solver.guess.as_ref().and_then(|g| g.first().copied()).unwrap_or(0.0);
        let a = gs.integrate_sheet(x0[2], p0, &g1, &g2, Order::T1First)?;
        let b = gs.integrate_sheet(x0[2], p0, &g1, &g2, Order::T2First)?;
        let gap = order_gap(&a, &b);
        return Ok(Artifacts {
            status: Status::Ok,
            summary: format!("graph sheet {}x{}, order gap {gap:e}", g1.len(), g2.len()),
            csv: Some(sheet_csv(&a, &p.state, &gs.controls, std::slice::from_ref(&gs.costate))),
            json: json!({ "order_gap": gap, "integrability_sup": gs.integrability_sup(flags.seed)?, "notes": a.notes }),
        });
    }
    let sys = span_system(p)?;
    let controls = SheetControls::from_problem(p)?;
    let r = rectangle(p);
    let k = nodes(file, flags) - 1;
    let g1 = nonholo::num::linspace(0.0, r[0], k);
    let g2 = nonholo::num::linspace(0.0, r[1], k);
    let x0 = p.boundary.x0_or(0.0);
    let a = integrate_sheet(&sys, &controls, &x0, &g1, &g2, Order::T1First)?;
    let b = integrate_sheet(&sys, &controls, &x0, &g1, &g2, Order::T2First)?;
    let gap = order_gap(&a, &b);
    let grid_cic = cic_residual_sheet(&sys, &a)?.sup;
    let mut json = Map::new();
    json.insert("order_gap".into(), json!(gap));
    json.insert("cic_sheet_sup".into(), json!(grid_cic));
    let mut summary = format!("sheet {}x{}, order gap {gap:e}", g1.len(), g2.len());
    if flags.cic {
        let sup = cic_residual(&sys, &controls, &sample_points(p.n(), flags.seed))?.sup;
        json.insert("cic_sup".into(), json!(sup));
        summary.push_str(&format!(", CIC residual {sup:e}"));
    }
    json.insert("notes".into(), json!(a.notes));
    Ok(Artifacts {
        status: Status::Ok,
        summary,
        csv: Some(sheet_csv(&a, &p.state, &p.controls, &[])),
        json: Value::Object(json),
    })
}

fn order_gap(a: &Sheet<f64>, b: &Sheet<f64>) -> f64 {
    a.x.iter()
        .zip(&b.x)
        .flat_map(|(p, q)| p.iter().zip(q).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// Largest distance of `v` from the span of `basis` (Gram–Schmidt).
fn off_span(basis: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut w = b.clone();
        for o in &ortho {
            let c = nonholo::num::dot(&w, o);
            w.iter_mut().zip(o).for_each(|(a, b)| *a -= c * b);
        }
        let n = nonholo::num::norm2(&w);
        if n > 1e-12 {
            ortho.push(w.iter().map(|a| a / n).collect());
        }
    }
    let mut r = v.to_vec();
    for o in &ortho {
        let c = nonholo::num::dot(&r, o);
        r.iter_mut().zip(o).for_each(|(a, b)| *a -= c * b);
    }
    nonholo::num::norm2(&r)
}

fn geometry(file: &ProblemFile, flags: &Flags) -> Result<Artifacts, CliError> {
    let p = problem(file)?;
    let all = !flags.frobenius && !flags.cic;
    let mut json = Map::new();
    let mut lines = Vec::new();
    let mut status = Status::Ok;
    if flags.frobenius || all {
        match &p.distribution {
            Distribution::Kernel(w) => {
                let c = frobenius_coefficient(w, &p.state)?.simplify();
                let verdict = frobenius_verdict(&c, flags.seed).as_str();
                lines.push(format!("frobenius = {c}"));
                lines.push(format!("verdict = {verdict}"));
                json.insert("frobenius".into(), json!(c.to_string()));
                json.insert("verdict".into(), json!(verdict));
            }
            Distribution::Span { fields, .. } => {
                let vars = Vars::new(&p.state);
                let compiled = fields.iter().map(|f| f.compile(&vars)).collect::<Result<Vec<_>, _>>()?;
                let mut brackets = Map::new();
                let mut worst = 0.0f64;
                let pts = cloud(p.n(), nonholo::sample::CLOUD_SIZE, flags.seed);
                for a in 0..fields.len() {
                    for b in a + 1..fields.len() {
                        let br = lie_bracket(&fields[a], &fields[b], &p.state)?;
                        let shown: Vec<String> = br.components().iter().map(|e| e.to_string()).collect();
                        lines.push(format!("[X{}, X{}] = ({})", a + 1, b + 1, shown.join(", ")));
                        brackets.insert(format!("X{}_X{}", a + 1, b + 1), json!(shown));
                        let bc = br.compile(&vars)?;
                        for x in &pts {
                            let basis = compiled
                                .iter()
                                .map(|f| f.iter().map(|c| c.eval(x)).collect::<Result<Vec<f64>, _>>())
                                .collect::<Result<Vec<_>, _>>()
                                .map_err(nonholo::Error::from)?;
                            let v = bc.iter().map(|c| c.eval(x)).collect::<Result<Vec<f64>, _>>().map_err(nonholo::Error::from)?;
                            worst = worst.max(off_span(&basis, &v));
                        }
                    }
                }
                let verdict = if worst < 1e-10 { "integrable" } else { "nonholonomic" };
                lines.push(format!("verdict = {verdict}"));
                json.insert("brackets".into(), Value::Object(brackets));
                json.insert("bracket_defect".into(), json!(worst));
                json.insert("verdict".into(), json!(verdict));
            }
        }
    }
    if flags.cic || (all && p.m == 2 && span_fields(p).is_some()) {
        let sys = span_system(p)?;
        let controls = SheetControls::from_problem(p)?;
        let sup = cic_residual(&sys, &controls, &sample_points(p.n(), flags.seed))?.sup;
        lines.push(format!("cic_sup = {sup:e}"));
        json.insert("cic_sup".into(), json!(sup));
        if sup > tol(file, flags).unwrap_or(1e-10) {
            status = Status::NoConv;
        }
    }
    Ok(Artifacts {
        status,
        summary: lines.join("\n"),
        csv: None,
        json: Value::Object(json),
    })
}

fn riemann(file: &ProblemFile, flags: &Flags) -> Result<Artifacts, CliError> {
    let spec = file
        .riemann
        .as_ref()
        .ok_or_else(|| CliError::Usage("riemann needs a [riemann] section".into()))?;
    let (g, x) = (&spec.metric, &spec.field);
    let steps = steps(file, flags).unwrap_or(1000);
    let gamma = christoffel(g)?;
    let n = g.dim();
    let coords: Vec<String> = g.coords().names().map(str::to_string).collect();
    let mut symbols = Map::new();
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let s = gamma.symbol(k, i, j);
                if !s.is_zero() {
                    symbols.insert(format!("{}_{}{}", coords[k], coords[i], coords[j]), json!(s.to_string()));
                }
            }
        }
    }
    let line = field_line(x, g, &spec.x0, spec.t1, steps)?;
    let geo = geodesic_field_residual(x, g)?;
    let (_, pts, _) = line.samples(0)?;
    let mut geodesic = 0.0f64;
    for q in &pts {
        geodesic = geo.eval(q)?.iter().fold(geodesic, |m, v| m.max(v.abs()));
    }
    let w = work(x, g, &line)?;
    let l = length(g, &line)?;
    let crit = criticality_residual(x, g, &line, steps)?;
    let mut excess = f64::NEG_INFINITY;
    for c in sinusoidal_perturbations(&line, spec.perturbations, spec.amplitude, flags.seed)? {
        excess = excess.max(work(x, g, &c)? - w);
    }
    let tr = Trajectory {
        t: nonholo::num::linspace(0.0, spec.t1, steps),
        x: pts,
        ..Default::default()
    };
    Ok(Artifacts {
        status: Status::Ok,
        summary: format!("work {w:.12}, length {l:.12}, geodesic defect {geodesic:e}, max perturbed excess {excess:e}"),
        csv: Some(trajectory_csv(&tr, &coords, &[], &[])),
        json: json!({
            "christoffel": symbols,
            "work": w,
            "length": l,
            "geodesic_defect": geodesic,
            "criticality": crit,
            "perturbations": spec.perturbations,
            "max_excess": if spec.perturbations == 0 { Value::Null } else { json!(excess) },
        }),
    })
}
