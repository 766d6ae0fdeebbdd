//! Bang-bang synthesis from switching functions.
//!
//! Sign conventions: solvers work with the maximization-canonical costate
//! `p`, for which optimal controls maximize `H`. Switching values are
//! reported in the minimization convention `Q_a = λ_i X^i_a` with `λ = −p`,
//! so that `u^a = −sign(Q_a)`.

use crate::expr::Vars;
use crate::geometry::ControlSystem;
use crate::geometry::Distribution;
use crate::ocp::{ControlBox, CostKind, OCProblem, Trajectory};
use crate::ode::{rk4_step, Rk4Work};
use crate::solve::{newton, NewtonOptions};
use crate::{num::linspace, Error, Result, Scalar};

/// Default switching threshold.
pub const EPS_SW: f64 = 1e-9;

/// Singular-fraction level at which an arc is declared all-singular.
pub const SINGULAR_LIMIT: f64 = 0.01;

/// `Q_a = λ_i X^i_a(x)`.
pub fn switching<T: Scalar>(lambda: &[T], x: &[T], system: &ControlSystem) -> Result<Vec<T>> {
    system.switching(x, lambda)
}

/// `u^a = −sign(Q_a)` on `[-1, 1]`; components with `|Q_a| ≤ eps` get value
/// `0` and a singular flag.
pub fn bang_law<T: Scalar>(q: &[T], eps: T) -> (Vec<T>, Vec<bool>) {
    let mut u = Vec::with_capacity(q.len());
    let mut flags = Vec::with_capacity(q.len());
    for &v in q {
        if v < -eps {
            u.push(T::one());
            flags.push(false);
        } else if v > eps {
            u.push(-T::one());
            flags.push(false);
        } else {
            u.push(T::zero());
            flags.push(true);
        }
    }
    (u, flags)
}

/// [`bang_law`] on a general box. Singular components take the midpoint; a
/// degenerate interval is never singular.
pub fn bang_law_box<T: Scalar>(q: &[T], eps: T, lower: &[f64], upper: &[f64]) -> (Vec<T>, Vec<bool>) {
    let mut u = Vec::with_capacity(q.len());
    let mut flags = Vec::with_capacity(q.len());
    for (a, &v) in q.iter().enumerate() {
        let (lo, hi) = (T::lit(lower[a]), T::lit(upper[a]));
        if lo == hi {
            u.push(lo);
            flags.push(false);
        } else if v < -eps {
            u.push(hi);
            flags.push(false);
        } else if v > eps {
            u.push(lo);
            flags.push(false);
        } else {
            u.push((lo + hi) / T::lit(2.0));
            flags.push(true);
        }
    }
    (u, flags)
}

/// Switching samples along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingProfile {
    pub t: Vec<f64>,
    /// `q[k][a]`.
    pub q: Vec<Vec<f64>>,
    /// Sign-change times per generator, by linear interpolation.
    pub switches: Vec<Vec<f64>>,
    /// Fraction of samples with `|Q_a| < eps` per generator.
    pub singular_fraction: Vec<f64>,
}

impl SwitchingProfile {
    pub fn new(t: &[f64], q: &[Vec<f64>], eps: f64) -> SwitchingProfile {
        let k = q.first().map_or(0, Vec::len);
        let mut switches = vec![Vec::new(); k];
        let mut singular = vec![0usize; k];
        for a in 0..k {
            for i in 0..q.len() {
                if q[i][a].abs() < eps {
                    singular[a] += 1;
                }
                if i > 0 {
                    let (q0, q1) = (q[i - 1][a], q[i][a]);
                    if q0.abs() >= eps && q1.abs() >= eps && q0.signum() != q1.signum() {
                        let s = t[i - 1] + (t[i] - t[i - 1]) * q0 / (q0 - q1);
                        switches[a].push(s);
                    }
                }
            }
        }
        let len = q.len().max(1) as f64;
        SwitchingProfile {
            t: t.to_vec(),
            q: q.to_vec(),
            switches,
            singular_fraction: singular.into_iter().map(|c| c as f64 / len).collect(),
        }
    }

    /// First generator whose singular fraction reaches the all-singular
    /// limit.
    pub fn all_singular(&self) -> Option<(usize, f64)> {
        self.singular_fraction
            .iter()
            .copied()
            .enumerate()
            .find(|(_, f)| *f >= SINGULAR_LIMIT)
    }

    /// Whether any sample had a vanishing switching value.
    pub fn any_singular(&self) -> bool {
        self.singular_fraction.iter().any(|f| *f > 0.0)
    }
}

fn span_system(problem: &OCProblem) -> Result<ControlSystem> {
    match &problem.distribution {
        Distribution::Span { fields, .. } => ControlSystem::new(&problem.state, fields.clone()),
        Distribution::Kernel(_) => Err(Error::Unsupported(
            "bang-bang synthesis needs span-form dynamics".into(),
        )),
    }
}

fn check_valid(problem: &OCProblem) -> Result<()> {
    let d = problem.validate();
    if d.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(
            d.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BangOptions {
    pub eps: f64,
    /// Output grid nodes.
    pub nodes: usize,
    /// RK4 steps per unit time for the inner integrations.
    pub steps_per_unit: usize,
    pub newton: NewtonOptions,
}

impl Default for BangOptions {
    fn default() -> Self {
        BangOptions {
            eps: EPS_SW,
            nodes: 1001,
            steps_per_unit: 1000,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeOptimal {
    pub trajectory: Trajectory<f64>,
    pub tau: f64,
    pub profile: SwitchingProfile,
    pub converged: bool,
    /// Distance of `x(τ)` from the target.
    pub miss: f64,
}

struct Augmented<'a> {
    sys: &'a ControlSystem,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Augmented<'_> {
    /// σ_a = p · X_a(x) (maximization convention).
    fn sigma(&self, z: &[f64]) -> Result<Vec<f64>> {
        let n = self.sys.dim();
        self.sys.switching(&z[..n], &z[n..])
    }

    fn smoothed(&self, sigma: &[f64], delta: f64) -> Vec<f64> {
        sigma
            .iter()
            .enumerate()
            .map(|(a, s)| {
                let mid = 0.5 * (self.lower[a] + self.upper[a]);
                let half = 0.5 * (self.upper[a] - self.lower[a]);
                mid + half * (s / delta).tanh()
            })
            .collect()
    }

    fn hamiltonian(&self, sigma: &[f64], u: &[f64]) -> f64 {
        -1.0 + sigma.iter().zip(u).map(|(s, v)| s * v).sum::<f64>()
    }

    /// Joint state/costate right-hand side scaled by `tau`.
    fn rhs(&self, z: &[f64], u: &[f64], tau: f64, out: &mut [f64]) -> Result<()> {
        let n = self.sys.dim();
        let (x, p) = z.split_at(n);
        self.sys.velocity(x, u, &mut out[..n])?;
        self.sys.adjoint_rhs(x, p, u, None, &mut out[n..])?;
        out.iter_mut().for_each(|v| *v *= tau);
        Ok(())
    }
}

/// Minimum-time transfer to `problem.boundary.x1` under `ẋ = u^a X_a`,
/// `u ∈ box`, closed by `H(0) = 0`.
///
/// A smoothed problem (`u = mid + half·tanh(σ/δ)`) is solved for a
/// decreasing sequence of `δ`, then the exact bang-bang system is polished
/// with switch times located by bisection.
pub fn time_optimal_shoot(problem: &OCProblem, opts: &BangOptions) -> Result<TimeOptimal> {
    check_valid(problem)?;
    if !matches!(problem.cost.kind, CostKind::Time) {
        return Err(Error::Invalid("time_optimal_shoot needs a time cost".into()));
    }
    let sys = span_system(problem)?;
    let n = sys.dim();
    let x0 = problem.boundary.x0_or(0.0);
    let target: Vec<f64> = match &problem.boundary.x1 {
        Some(v) if v.iter().all(Option::is_some) => v.iter().map(|c| c.unwrap_or(0.0)).collect(),
        _ => return Err(Error::Invalid("time-optimal transfer needs a fully fixed target".into())),
    };
    let aug = Augmented {
        sys: &sys,
        lower: problem.bounds.lower.clone(),
        upper: problem.bounds.upper.clone(),
    };
    if (0..aug.lower.len()).any(|a| !problem.bounds.is_bounded(a)) {
        return Err(Error::Invalid("time-optimal transfer needs a bounded control box".into()));
    }
    let d: Vec<f64> = target.iter().zip(&x0).map(|(a, b)| a - b).collect();
    let dist = crate::num::norm2(&d);
    if dist == 0.0 {
        let k = sys.generators();
        let trajectory = Trajectory {
            t: vec![0.0],
            x: vec![x0.clone()],
            u: vec![vec![0.0; k]],
            p: vec![vec![0.0; n]],
            h: vec![0.0],
            q: Some(vec![vec![0.0; k]]),
            notes: Vec::new(),
        };
        return Ok(TimeOptimal {
            profile: SwitchingProfile::new(&[0.0], &[vec![0.0; k]], opts.eps),
            trajectory,
            tau: 0.0,
            converged: true,
            miss: 0.0,
        });
    }

    // Initial guess: costate along the displacement, scaled so H(0) ≈ 0.
    let sigma0 = sys.switching(&x0, &d)?;
    let scale: f64 = sigma0.iter().map(|s| s.abs()).sum::<f64>().max(1e-3);
    let mut z: Vec<f64> = d.iter().map(|v| v / scale).collect();
    z.push(dist);

    let steps = opts.steps_per_unit.max(10);
    for &delta in &[1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001] {
        let residual = |w: &[f64]| -> Result<Vec<f64>> {
            let tau = w[n];
            let mut y: Vec<f64> = x0.iter().chain(&w[..n]).copied().collect();
            let s0 = aug.sigma(&y)?;
            let h0 = aug.hamiltonian(&s0, &aug.smoothed(&s0, delta));
            let mut work = Rk4Work::new(2 * n);
            let h = 1.0 / steps as f64;
            for k in 0..steps {
                rk4_step(
                    &mut |_s, zz: &[f64], out: &mut [f64]| {
                        let u = aug.smoothed(&aug.sigma(zz)?, delta);
                        aug.rhs(zz, &u, tau, out)
                    },
                    k as f64 * h,
                    &mut y,
                    h,
                    &mut work,
                )?;
            }
            let mut r: Vec<f64> = y[..n].iter().zip(&target).map(|(a, b)| a - b).collect();
            r.push(h0);
            Ok(r)
        };
        let loose = NewtonOptions {
            tol: opts.newton.tol.max(1e-9),
            ..opts.newton
        };
        let out = newton(residual, &z, &loose)?;
        z = out.z;
        if z[n] < 0.0 {
            z[n] = z[n].abs();
        }
    }

    // Exact bang-bang polish over (p0, τ).
    let exact = |w: &[f64]| -> Result<Vec<f64>> {
        let (zf, h0) = bang_final(&aug, &x0, &w[..n], w[n], steps, opts.eps)?;
        let mut r: Vec<f64> = zf[..n].iter().zip(&target).map(|(a, b)| a - b).collect();
        r.push(h0);
        Ok(r)
    };
    let out = newton(exact, &z, &opts.newton)?;
    z = out.z;
    let tau = z[n];
    let (trajectory, profile) = bang_trajectory(&aug, &x0, &z[..n], tau, opts)?;
    if let Some((generator, fraction)) = profile.all_singular() {
        return Err(Error::AllSingular { generator, fraction });
    }
    let last = trajectory.x.last().cloned().unwrap_or_default();
    let miss = crate::num::norm_inf(&last.iter().zip(&target).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok(TimeOptimal {
        converged: out.converged && miss < 1e-8,
        trajectory,
        tau,
        profile,
        miss,
    })
}

/// Bang controls from σ = p·X (maximizing `H`).
fn bang_u(aug: &Augmented<'_>, sigma: &[f64], eps: f64) -> (Vec<f64>, Vec<bool>) {
    let q: Vec<f64> = sigma.iter().map(|s| -s).collect();
    bang_law_box(&q, eps, &aug.lower, &aug.upper)
}

/// One step of the bang system from normalized time `s` with step `h`,
/// splitting at the first sign change of any switching function.
fn bang_step(
    aug: &Augmented<'_>,
    y: &mut Vec<f64>,
    tau: f64,
    h: f64,
    eps: f64,
    work: &mut Rk4Work<f64>,
) -> Result<()> {
    let mut remaining = h;
    for _ in 0..8 {
        if remaining <= 0.0 {
            break;
        }
        let sigma = aug.sigma(y)?;
        let (u, _) = bang_u(aug, &sigma, eps);
        let advance = |y0: &[f64], dt: f64, work: &mut Rk4Work<f64>| -> Result<Vec<f64>> {
            let mut yy = y0.to_vec();
            rk4_step(&mut |_s, zz: &[f64], out: &mut [f64]| aug.rhs(zz, &u, tau, out), 0.0, &mut yy, dt, work)?;
            Ok(yy)
        };
        let end = advance(y, remaining, work)?;
        let sigma_end = aug.sigma(&end)?;
        let flips = |s1: &[f64]| {
            sigma
                .iter()
                .zip(s1)
                .any(|(a, b)| a.abs() > eps && b.abs() > eps && a.signum() != b.signum())
        };
        if !flips(&sigma_end) {
            *y = end;
            return Ok(());
        }
        let (mut lo, mut hi) = (0.0, remaining);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let ym = advance(y, mid, work)?;
            if flips(&aug.sigma(&ym)?) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        *y = advance(y, hi, work)?;
        remaining -= hi;
    }
    Ok(())
}

fn bang_final(aug: &Augmented<'_>, x0: &[f64], p0: &[f64], tau: f64, steps: usize, eps: f64) -> Result<(Vec<f64>, f64)> {
    let mut y: Vec<f64> = x0.iter().chain(p0).copied().collect();
    let s0 = aug.sigma(&y)?;
    let (u0, _) = bang_u(aug, &s0, eps);
    let h0 = aug.hamiltonian(&s0, &u0);
    let mut work = Rk4Work::new(y.len());
    let h = 1.0 / steps as f64;
    for _ in 0..steps {
        bang_step(aug, &mut y, tau, h, eps, &mut work)?;
    }
    Ok((y, h0))
}

fn bang_trajectory(
    aug: &Augmented<'_>,
    x0: &[f64],
    p0: &[f64],
    tau: f64,
    opts: &BangOptions,
) -> Result<(Trajectory<f64>, SwitchingProfile)> {
    let n = x0.len();
    let nodes = opts.nodes.max(2);
    let s = linspace(0.0, 1.0, nodes - 1);
    let sub = (opts.steps_per_unit / (nodes - 1)).max(1);
    let mut y: Vec<f64> = x0.iter().chain(p0).copied().collect();
    let mut work = Rk4Work::new(y.len());
    let mut traj = Trajectory {
        t: Vec::with_capacity(nodes),
        ..Default::default()
    };
    let mut qs = Vec::with_capacity(nodes);
    for k in 0..nodes {
        if k > 0 {
            let h = (s[k] - s[k - 1]) / sub as f64;
            for _ in 0..sub {
                bang_step(aug, &mut y, tau, h, opts.eps, &mut work)?;
            }
        }
        let sigma = aug.sigma(&y)?;
        let (u, _) = bang_u(aug, &sigma, opts.eps);
        traj.t.push(s[k] * tau);
        traj.x.push(y[..n].to_vec());
        traj.p.push(y[n..].to_vec());
        traj.h.push(aug.hamiltonian(&sigma, &u));
        traj.u.push(u);
        qs.push(sigma.iter().map(|v| -v).collect::<Vec<f64>>());
    }
    let profile = SwitchingProfile::new(&traj.t, &qs, opts.eps);
    traj.q = Some(qs);
    Ok((traj, profile))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalBang {
    pub trajectory: Trajectory<f64>,
    pub profile: SwitchingProfile,
    /// Terminal cost in the problem's own sense.
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Fixed-horizon minimization (or maximization) of a terminal cost under
/// `ẋ = u^a X_a`, by forward–backward sweeps of the bang law.
pub fn terminal_value_bang(problem: &OCProblem, opts: &BangOptions) -> Result<TerminalBang> {
    check_valid(problem)?;
    let g = problem
        .canonical_terminal()
        .ok_or_else(|| Error::Invalid("terminal_value_bang needs a terminal cost".into()))?;
    if !matches!(problem.cost.kind, CostKind::Terminal(_)) {
        return Err(Error::Invalid("terminal_value_bang needs a terminal cost".into()));
    }
    let sys = span_system(problem)?;
    let n = sys.dim();
    let k = sys.generators();
    let (t0, t1) = problem.interval()?;
    let x0 = problem.boundary.x0_or(0.0);
    let vars = Vars::new(&problem.state);
    let grad = problem
        .state
        .iter()
        .map(|s| Ok(g.diff(s).compile(&vars)?))
        .collect::<Result<Vec<_>>>()?;
    let g_c = g.compile(&vars)?;
    let bounds: &ControlBox = &problem.bounds;
    let nodes = opts.nodes.max(2);
    let t = linspace(t0, t1, nodes - 1);
    let mid: Vec<f64> = (0..k)
        .map(|a| {
            let (lo, hi) = (bounds.lower[a], bounds.upper[a]);
            if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                0.0
            }
        })
        .collect();
    let mut u: Vec<Vec<f64>> = vec![mid; nodes];
    let mut flags = vec![vec![false; k]; nodes];
    let mut x = vec![x0.clone(); nodes];
    let mut p = vec![vec![0.0; n]; nodes];
    let mut q = vec![vec![0.0; k]; nodes];
    let mut converged = false;
    let mut iterations = 0;
    let mut work = Rk4Work::new(n);
    while iterations < 50 {
        iterations += 1;
        // Forward with piecewise-constant controls.
        let mut y = x0.clone();
        x[0] = y.clone();
        for i in 1..nodes {
            let ui = u[i - 1].clone();
            rk4_step(&mut |_t, z: &[f64], out: &mut [f64]| sys.velocity(z, &ui, out), t[i - 1], &mut y, t[i] - t[i - 1], &mut work)?;
            x[i] = y.clone();
        }
        // Backward costate from p(t1) = ∇g.
        let xf = &x[nodes - 1];
        let mut pc: Vec<f64> = grad.iter().map(|c| c.eval(xf)).collect::<Result<_, _>>()?;
        p[nodes - 1] = pc.clone();
        for i in (1..nodes).rev() {
            let (ui, xa, xb) = (u[i - 1].clone(), x[i - 1].clone(), x[i].clone());
            let (ta, tb) = (t[i - 1], t[i]);
            rk4_step(
                &mut |s, z: &[f64], out: &mut [f64]| {
                    let w = (s - tb) / (ta - tb);
                    let xs: Vec<f64> = xb.iter().zip(&xa).map(|(b, a)| b + w * (a - b)).collect();
                    sys.adjoint_rhs(&xs, z, &ui, None, out)
                },
                tb,
                &mut pc,
                ta - tb,
                &mut work,
            )?;
            p[i - 1] = pc.clone();
        }
        let mut changed = false;
        for i in 0..nodes {
            let sigma = sys.switching(&x[i], &p[i])?;
            q[i] = sigma.iter().map(|s| -s).collect();
            let (un, fl) = bang_law_box(&q[i], opts.eps, &bounds.lower, &bounds.upper);
            if un != u[i] {
                changed = true;
            }
            u[i] = un;
            flags[i] = fl;
        }
        if !changed {
            converged = true;
            break;
        }
    }
    let value_c = g_c.eval(&x[nodes - 1])?;
    let profile = SwitchingProfile::new(&t, &q, opts.eps);
    let mut notes = Vec::new();
    if profile.any_singular() {
        notes.push("switching function vanishes on part of the horizon".to_string());
    }
    let h: Vec<f64> = (0..nodes)
        .map(|i| -q[i].iter().zip(&u[i]).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    Ok(TerminalBang {
        trajectory: Trajectory {
            t,
            x,
            u,
            p,
            h,
            q: Some(q),
            notes,
        },
        profile,
        value: value_c * problem.sense.sign(),
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::VectorField;
    use crate::ocp::{Boundary, CostFunctional, Sense};

    #[test]
    fn truth_table() {
        let (u, f) = bang_law(&[-0.5, 0.0, 0.3, 1e-10], 1e-9);
        assert_eq!(u, vec![1.0, 0.0, -1.0, 0.0]);
        assert_eq!(f, vec![false, true, false, true]);
    }

    #[test]
    fn degenerate_box_never_singular() {
        let (u, f) = bang_law_box(&[0.0, 0.0], 1e-9, &[1.0, -1.0], &[1.0, 1.0]);
        assert_eq!(u, vec![1.0, 0.0]);
        assert_eq!(f, vec![false, true]);
    }

    fn time_problem(fields: Vec<VectorField>, state: &[&str], x0: &[f64]) -> OCProblem {
        let k = fields.len();
        let mut p = OCProblem::span("to", state, fields);
        p.bounds = ControlBox::symmetric(k, 1.0);
        p.cost = CostFunctional {
            kind: CostKind::Time,
            terminal: None,
        };
        p.sense = Sense::Minimize;
        p.boundary = Boundary::fixed(x0, Some(&vec![0.0; state.len()]));
        p
    }

    #[test]
    fn one_dimensional_minimum_time() {
        let p = time_problem(vec![VectorField::coordinate(1, 0)], &["x"], &[2.0]);
        let r = time_optimal_shoot(&p, &BangOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.tau - 2.0).abs() < 1e-8);
        assert!(r.trajectory.u.iter().all(|u| u[0] == -1.0));
    }

    #[test]
    fn decoupled_pair() {
        let fields = vec![VectorField::coordinate(2, 0), VectorField::coordinate(2, 1)];
        let p = time_problem(fields, &["x1", "x2"], &[1.0, -1.0]);
        let r = time_optimal_shoot(&p, &BangOptions::default()).unwrap();
        assert!(r.converged, "{} {}", r.tau, r.miss);
        assert!((r.tau - 1.0).abs() < 1e-6);
        let bang = r.trajectory.u.iter().filter(|u| u[0] == -1.0 && u[1] == 1.0).count();
        assert!(bang as f64 >= 0.99 * r.trajectory.len() as f64);
        // Scaling the costate leaves the law unchanged.
        for (x, p) in r.trajectory.x.iter().zip(&r.trajectory.p) {
            let sys = span_system(&r_problem()).unwrap();
            let q1 = switching(&p.iter().map(|v| -v).collect::<Vec<_>>(), x, &sys).unwrap();
            let q2: Vec<f64> = q1.iter().map(|v| 3.5 * v).collect();
            assert_eq!(bang_law(&q1, EPS_SW).0, bang_law(&q2, EPS_SW).0);
        }
    }

    fn r_problem() -> OCProblem {
        let fields = vec![VectorField::coordinate(2, 0), VectorField::coordinate(2, 1)];
        time_problem(fields, &["x1", "x2"], &[1.0, -1.0])
    }

    #[test]
    fn start_on_target() {
        let p = time_problem(vec![VectorField::coordinate(1, 0)], &["x"], &[0.0]);
        let r = time_optimal_shoot(&p, &BangOptions::default()).unwrap();
        assert_eq!(r.tau, 0.0);
    }

    #[test]
    fn terminal_value_scalar() {
        let mut p = OCProblem::span("tv", &["x"], vec![VectorField::coordinate(1, 0)]);
        p.bounds = ControlBox::symmetric(1, 1.0);
        p.cost = CostFunctional::terminal_component(&p.state, 0);
        p.sense = Sense::Minimize;
        let r = terminal_value_bang(&p, &BangOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.value + 1.0).abs() < 1e-12);
        assert!(r.trajectory.u.iter().all(|u| u[0] == -1.0));
    }

    #[test]
    fn terminal_value_decoupled_component() {
        let mut p = OCProblem::span("tv", &["x", "y"], vec![VectorField::coordinate(2, 0)]);
        p.bounds = ControlBox::symmetric(1, 1.0);
        p.cost = CostFunctional::terminal_component(&p.state, 1);
        p.sense = Sense::Minimize;
        p.boundary = Boundary::fixed(&[0.0, 0.7], None);
        let r = terminal_value_bang(&p, &BangOptions::default()).unwrap();
        assert!((r.value - 0.7).abs() < 1e-15);
        assert!(r.profile.any_singular());
        assert!(!r.trajectory.notes.is_empty());
    }

    #[test]
    fn terminal_value_drift_example() {
        // ẋ¹ = (x²)² (generator with control pinned to 1), ẋ² = u.
        let v = ["x1", "x2"];
        let fields = vec![
            VectorField::parse(&["x2^2", "0"], &v).unwrap(),
            VectorField::coordinate(2, 1),
        ];
        let mut p = OCProblem::span("drift", &v, fields);
        p.bounds = ControlBox {
            lower: vec![1.0, -1.0],
            upper: vec![1.0, 1.0],
        };
        p.cost = CostFunctional::terminal_component(&p.state, 0);
        p.sense = Sense::Minimize;
        let r = terminal_value_bang(&p, &BangOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.trajectory.x.windows(2).all(|w| w[1][0] >= w[0][0]));
        assert!(r.trajectory.x.iter().all(|x| x[1] == 0.0));
    }
}
