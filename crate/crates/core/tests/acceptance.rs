mod common;

use nonholo::bang::{bang_law, time_optimal_shoot, BangOptions};
use nonholo::curve::Curve;
use nonholo::expr::VarEnv;
use nonholo::geometry::{frobenius_coefficient, frobenius_verdict, lie_bracket, ControlSystem, PfaffForm, Verdict, VectorField};
use nonholo::multitime::{cic_residual, graph_system, integrate_sheet, torsion_solve, Order, SheetControls, TorsionBranch};
use nonholo::num::linspace;
use nonholo::ocp::{Boundary, ControlBox, CostFunctional, CostKind, OCProblem, Sense};
use nonholo::pmp::{build_hamiltonian, check_extremal, ControlLaw};
use nonholo::riemann::{field_line, length, sinusoidal_perturbations, work, Metric};
use nonholo::sample::cloud;
use nonholo::{parse, Expr, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn env(names: &[&str], vals: &[f64]) -> VarEnv<f64> {
    names.iter().map(|s| s.to_string()).zip(vals.iter().copied()).collect()
}

fn eval_field(f: &VectorField, names: &[&str], p: &[f64]) -> Vec<f64> {
    f.components().iter().map(|c| c.evaluate(&env(names, p)).unwrap()).collect()
}

fn lie_brackets() -> Outcome {
    let v = ["x1", "x2"];
    let x = VectorField::parse(&["x2^2", "0"], &v).unwrap();
    let y = VectorField::coordinate(2, 1);
    let xy = lie_bracket(&x, &y, &v).unwrap();
    let xyy = lie_bracket(&xy, &y, &v).unwrap();
    let mut worst: f64 = 0.0;
    for p in cloud(2, 10, 11).iter().map(|p| [2.0 * p[0], 2.0 * p[1]]) {
        let a = eval_field(&xy, &v, &p);
        let b = eval_field(&xyy, &v, &p);
        let e1 = [-2.0 * p[1], 0.0];
        let e2 = [2.0, 0.0];
        for k in 0..2 {
            worst = worst.max((a[k] - e1[k]).abs()).max((b[k] - e2[k]).abs());
        }
    }
    ensure(worst < 1e-12, format!("max error {worst:.3e}"))
}

fn martinet_problem() -> OCProblem {
    let v = ["x", "y", "z", "u"];
    let w = PfaffForm::parse(&["1/2*(y^2+u)", "0", "-1"], &v).unwrap();
    let mut p = OCProblem::pfaff("martinet", &["x", "y", "z"], &["u"], w);
    p.cost = CostFunctional::simple(parse("1/2*(u^2+z^2)", &v).unwrap());
    p.sense = Sense::Minimize;
    p.boundary = Boundary::fixed(&[0.0, 1.0, 1.0], Some(&[0.0, 0.5f64.sqrt(), 1.0]));
    p
}

fn martinet_nonholonomy() -> Outcome {
    let v = ["x", "y", "z", "u"];
    let w = PfaffForm::parse(&["1/2*(y^2+u)", "0", "-1"], &v).unwrap();
    let c = frobenius_coefficient(&w, &["x", "y", "z"]).unwrap().simplify();
    let mut worst: f64 = 0.0;
    for p in cloud(4, 50, 12) {
        worst = worst.max((c.evaluate(&env(&v, &p)).unwrap() - p[1]).abs());
    }
    let verdict = frobenius_verdict(&c, nonholo::sample::DEFAULT_SEED);
    ensure(
        c.to_string() == "y" && worst < 1e-12 && verdict == Verdict::Nonholonomic,
        format!("coefficient {c}, max error {worst:.3e}, verdict {}", verdict.as_str()),
    )
}

fn martinet_candidate(points: usize, y_scale: f64) -> Trajectory {
    let (c, c3, c4) = (1.0, 1.0, 1.0);
    let mut tr = Trajectory::default();
    tr.t = linspace(0.0f64, 1.0, points - 1);
    for &s in &tr.t {
        let y = y_scale * (c / (c3 * s + c4)).sqrt();
        let ydot = -0.5 * y_scale * c.sqrt() * c3 * (c3 * s + c4).powf(-1.5);
        tr.x.push(vec![c, y, c3]);
        tr.u.push(vec![0.0, 0.0, ydot]);
        tr.p.push(vec![-c / 2.0, 0.0, c3 * s + c4]);
    }
    tr
}

fn martinet_extremal() -> Outcome {
    let mut p = martinet_problem();
    p.boundary = Boundary::fixed(&[1.0, 1.0, 1.0], Some(&[1.0, 0.5f64.sqrt(), 1.0]));
    let report = check_extremal(&p, &martinet_candidate(1000, 1.0)).unwrap();
    let bad = check_extremal(&p, &martinet_candidate(1000, 1.1)).unwrap();
    let entries: Vec<String> = report.iter().map(|(k, v)| format!("{k}={v:.2e}")).collect();
    ensure(
        report.max() < 1e-8 && bad.max() > 1e-3,
        format!("{} (perturbed {:.2e})", entries.join(" "), bad.max()),
    )
}

fn torsion_reconstruction() -> Outcome {
    let (c1, c2) = (2.0 + 5f64.sqrt(), 1.0);
    let sol = torsion_solve(c1, c2, None).unwrap();
    let TorsionBranch::Surface(surface) = &sol.branch else {
        return Err("integrable branch not detected".into());
    };
    let gs = graph_system(&sol.problem).unwrap();
    let g = linspace(0.0, 1.0, 49);
    let sheet = gs.integrate_sheet(0.0, 0.0, &g, &g, Order::T1First).unwrap();
    let sheet_err = sheet
        .x
        .iter()
        .map(|x| (surface.evaluate(&env(&["x", "y"], &x[..2])).unwrap() - x[2]).abs())
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut p_err: f64 = 0.0;
    for _ in 0..5 {
        let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let curve = Curve::parse(
            &[&format!("tau + {:?}*sin(3.14159*tau)", a[0]), &format!("{:?}*tau + {:?}*tau^2 + {:?}*sin(2*tau)", 1.0 + a[1], a[2], a[3])],
            "tau",
            0.0,
            1.0,
        )
        .unwrap();
        let tr = gs.integrate_curve(&curve, 0.0, 0.0, 1000).unwrap();
        for (x, p) in tr.x.iter().zip(&tr.p) {
            p_err = p_err.max((p[0] - (c1 * x[0] + c2 * x[1])).abs());
        }
    }
    ensure(
        sheet_err < 1e-6 && p_err < 1e-9,
        format!("surface vs sheet {sheet_err:.3e}, costate along curves {p_err:.3e}"),
    )
}

fn duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let sys = common::random_system(&mut rng, 2);
        let fb = common::random_feedback(&mut rng, 2);
        let v: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect();
        for closed in [false, true] {
            let d = common::pairing_drift(&sys, closed.then_some(&fb), &v[0], &v[1], &v[2], 1e-3).unwrap();
            worst = worst.max(d);
        }
    }
    ensure(worst < 1e-8, format!("max drift {worst:.3e}"))
}

fn bang_bang() -> Outcome {
    let mut p = OCProblem::span("decoupled", &["x1", "x2"], vec![VectorField::coordinate(2, 0), VectorField::coordinate(2, 1)]);
    p.bounds = ControlBox::symmetric(2, 1.0);
    p.cost = CostFunctional {
        kind: CostKind::Time,
        terminal: None,
    };
    p.sense = Sense::Minimize;
    p.boundary = Boundary::fixed(&[1.0, -1.0], Some(&[0.0, 0.0]));
    let r = time_optimal_shoot(&p, &BangOptions::default()).unwrap();
    let vertex = r.trajectory.u.iter().filter(|u| u.iter().all(|v| v.abs() == 1.0)).count();
    let frac = vertex as f64 / r.trajectory.len() as f64;
    let (u, flags) = bang_law(&[-0.5, 0.0, 0.3], 1e-9);
    let table = u == [1.0, 0.0, -1.0] && flags == [false, true, false];
    ensure(
        r.converged && (r.tau - 1.0).abs() < 1e-6 && frac >= 0.99 && table,
        format!("tau {:.12}, vertex fraction {frac:.4}, truth table {}", r.tau, if table { "ok" } else { "mismatch" }),
    )
}

fn path_independence() -> Outcome {
    let v = ["x1", "x2", "x3"];
    let sys = ControlSystem::new(
        &v,
        vec![VectorField::parse(&["1", "0", "x2"], &v).unwrap(), VectorField::parse(&["0", "1", "x1"], &v).unwrap()],
    )
    .unwrap();
    let names = ["t1", "t2", "x1", "x2", "x3"];
    let e = |s: &str| parse(s, &names).unwrap();
    // Gradients of φ¹ = t1² + t1 t2, φ² = t1 + sin(t2).
    let gradient = SheetControls::new(&v, vec![vec![e("2*t1 + t2"), e("1")], vec![e("t1"), e("cos(t2)")]]).unwrap();
    let plus = SheetControls::constant(&v, &[vec![0.7, -0.4], vec![0.7, -0.4]]).unwrap();
    let minus = SheetControls::constant(&v, &[vec![0.7, -0.4], vec![-0.7, 0.4]]).unwrap();
    let g = linspace(0.0, 1.0, 40);
    let mut gap: f64 = 0.0;
    for ctl in [&gradient, &plus, &minus] {
        let a = integrate_sheet(&sys, ctl, &[0.1, -0.2, 0.3], &g, &g, Order::T1First).unwrap();
        let b = integrate_sheet(&sys, ctl, &[0.1, -0.2, 0.3], &g, &g, Order::T2First).unwrap();
        for (p, q) in a.x.iter().zip(&b.x) {
            for k in 0..3 {
                gap = gap.max((p[k] - q[k]).abs());
            }
        }
    }
    let hv = ["x", "y", "z"];
    let heis = ControlSystem::new(
        &hv,
        vec![VectorField::parse(&["1", "0", "-y/2"], &hv).unwrap(), VectorField::parse(&["0", "1", "x/2"], &hv).unwrap()],
    )
    .unwrap();
    let unit = SheetControls::constant(&hv, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let pts: Vec<([f64; 2], Vec<f64>)> = cloud(5, 10, 17).into_iter().map(|z| ([z[0], z[1]], z[2..].to_vec())).collect();
    let r = cic_residual(&heis, &unit, &pts).unwrap();
    let mut bracket_err: f64 = 0.0;
    for k in 0..pts.len() {
        let r12 = r.at(k, 0, 1);
        bracket_err = bracket_err.max(r12[0].abs()).max(r12[1].abs()).max((r12[2] - 1.0).abs());
    }
    ensure(
        gap < 1e-6 && bracket_err < 1e-10,
        format!("order gap {gap:.3e}, Heisenberg residual vs bracket {bracket_err:.3e}"),
    )
}

fn riemannian_work() -> Outcome {
    let g = Metric::parse(&["r", "th"], &[vec!["1", "0"], vec!["0", "r^2"]]).unwrap();
    let x = VectorField::coordinate(2, 0);
    let base = Curve::parse(&["1 + tau", "0.3"], "tau", 0.0, 1.0).unwrap();
    let traced = field_line(&x, &g, &[1.0, 0.3], 1.0, 1000).unwrap();
    let w = work(&x, &g, &base).unwrap();
    let l = length(&g, &base).unwrap();
    let traced_gap = (work(&x, &g, &traced).unwrap() - length(&g, &traced).unwrap()).abs();
    let mut excess = f64::NEG_INFINITY;
    for c in sinusoidal_perturbations(&base, 20, 0.3, 18).unwrap() {
        excess = excess.max(work(&x, &g, &c).unwrap() - w);
    }
    ensure(
        (w - l).abs() < 1e-10 && traced_gap < 1e-10 && excess <= 1e-9,
        format!("work {w:.12} length {l:.12}, traced gap {traced_gap:.3e}, max excess {excess:.3e}"),
    )
}

fn expression_classes() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("polynomial", vec!["x^3*y - 2*x*z + z^2", "(x + y + z)^4", "3*x^2*y^2*z - y"]),
        ("rational", vec!["x/(1 + y^2)", "(x*y - 1)/(2 + z^2 + x^2)", "1/(3 + x + y)"]),
        ("trigonometric", vec!["sin(x*y) + cos(z)", "sin(x)^2*cos(y - z)", "atan(x*z + y)"]),
        ("exponential", vec!["exp(x*y - z)", "ln(2 + x^2 + y)", "sqrt(4 + x*y*z)"]),
        ("composed", vec!["exp(sin(x))*sqrt(1 + y^2)", "ln(1 + exp(x*y))/(2 + cos(z))", "atan(exp(x) - y)^2*abs(z + 3)"]),
    ]
}

fn symbolic_gradients() -> Outcome {
    let v = ["x", "y", "z"];
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (ci, (_, exprs)) in expression_classes().into_iter().enumerate() {
        let exprs: Vec<Expr> = exprs.iter().map(|s| parse(s, &v).unwrap()).collect();
        let grads: Vec<Vec<Expr>> = exprs.iter().map(|e| v.iter().map(|n| e.diff(n)).collect()).collect();
        for p in cloud(3, 100, 100 + ci as u64) {
            for (e, grad) in exprs.iter().zip(&grads) {
                for (k, d) in grad.iter().enumerate() {
                    let (mut a, mut b) = (p.clone(), p.clone());
                    a[k] += h;
                    b[k] -= h;
                    let fd = (e.evaluate(&env(&v, &a)).unwrap() - e.evaluate(&env(&v, &b)).unwrap()) / (2.0 * h);
                    let exact = d.evaluate(&env(&v, &p)).unwrap();
                    worst = worst.max((exact - fd).abs() / (1.0 + fd.abs()));
                }
            }
        }
    }
    ensure(worst < 1e-6, format!("max relative error {worst:.3e} over 5 classes x 100 samples"))
}

fn convergence_order() -> Outcome {
    let v = ["x", "y", "z"];
    let mut p = OCProblem::span(
        "heisenberg",
        &v,
        vec![VectorField::parse(&["1", "0", "-y/2"], &v).unwrap(), VectorField::parse(&["0", "1", "x/2"], &v).unwrap()],
    );
    p.cost = CostFunctional::simple(parse("-(u1^2+u2^2)/2 - z^2/2", &["z", "u1", "u2"]).unwrap());
    p.boundary = Boundary::fixed(&[0.1, -0.2, 0.3], None);
    let hd = build_hamiltonian(&p).unwrap();
    let res: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| {
            let tr = hd
                .integrate_extremal(&[0.1, -0.2, 0.3], &[0.4, 0.5, -0.6], ControlLaw::Stationary, &linspace(0.0f64, 1.0, n))
                .unwrap();
            let r = hd.residuals(&p, &tr).unwrap();
            r.get("dynamics").unwrap().max(r.get("adjoint").unwrap())
        })
        .collect();
    let orders: Vec<f64> = res.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    ensure(
        orders.iter().all(|o| *o >= 3.5),
        format!("residuals {:?}, observed orders {orders:.2?}", res.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>()),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("lie bracket oracle", lie_brackets),
        ("martinet nonholonomy", martinet_nonholonomy),
        ("martinet extremal residuals", martinet_extremal),
        ("torsion reconstruction", torsion_reconstruction),
        ("duality first integral", duality),
        ("bang-bang minimum time", bang_bang),
        ("multitime path independence", path_independence),
        ("riemannian work bound", riemannian_work),
        ("symbolic vs numeric gradients", symbolic_gradients),
        ("convergence order", convergence_order),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", i + 1);
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
