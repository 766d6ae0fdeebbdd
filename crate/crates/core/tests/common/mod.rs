#![allow(dead_code)]

use nonholo::geometry::{ControlSystem, Feedback, VectorField};
use nonholo::ode::rk4_grid;
use nonholo::{parse, Expr, Result};
use rand::Rng;

pub const STATE: [&str; 3] = ["x", "y", "z"];
pub const TIMES: [&str; 2] = ["t1", "t2"];

/// Quadratic polynomial in `x, y, z` with coefficients in `[−s, s]`.
pub fn random_poly<R: Rng>(rng: &mut R, s: f64) -> Expr {
    let monos = ["1", "x", "y", "z", "x*y", "y*z", "x*z", "x^2", "y^2", "z^2"];
    let terms: Vec<String> = monos
        .iter()
        .map(|m| format!("{:?}*{m}", rng.gen_range(-s..s)))
        .collect();
    parse(&terms.join(" + "), &STATE).unwrap()
}

/// Bounded smooth feedback `½ sin(q(x))` for a random quadratic `q`.
pub fn random_feedback<R: Rng>(rng: &mut R, k: usize) -> Feedback {
    let laws = (0..k).map(|_| Expr::c(0.5) * random_poly(rng, 1.0).sin()).collect();
    Feedback::new(&STATE, laws).unwrap()
}

pub fn random_system<R: Rng>(rng: &mut R, k: usize) -> ControlSystem {
    let fields = (0..k)
        .map(|_| VectorField::new((0..3).map(|_| random_poly(rng, 0.2)).collect()))
        .collect();
    ControlSystem::new(&STATE, fields).unwrap()
}

/// Integrates state, deformation `y` and costate `p` jointly with RK4 over
/// `[0, 1]` and returns `max_t |p·y(t) − p·y(0)|`. Controls are
/// `u^a = cos(t + a)` open loop, or the feedback in closed loop.
pub fn pairing_drift(
    sys: &ControlSystem,
    feedback: Option<&Feedback>,
    x0: &[f64],
    y0: &[f64],
    p0: &[f64],
    h: f64,
) -> Result<f64> {
    let n = sys.dim();
    let k = sys.generators();
    let steps = (1.0 / h).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
    let z0 = [x0, y0, p0].concat();
    let rows = rk4_grid(
        |t, z: &[f64], out: &mut [f64]| {
            let x = &z[..n];
            let (u, ux) = match feedback {
                Some(f) => (f.controls(x)?, Some(f.jacobian(x)?)),
                None => ((0..k).map(|a| (t + a as f64).cos()).collect(), None),
            };
            let (o1, rest) = out.split_at_mut(n);
            let (o2, o3) = rest.split_at_mut(n);
            sys.velocity(x, &u, o1)?;
            sys.deformation_rhs(x, &z[n..2 * n], &u, ux.as_deref(), o2)?;
            sys.adjoint_rhs(x, &z[2 * n..], &u, ux.as_deref(), o3)
        },
        &grid,
        &z0,
    )?;
    let pair = |z: &[f64]| (0..n).map(|i| z[n + i] * z[2 * n + i]).sum::<f64>();
    let start = pair(&rows[0]);
    Ok(rows.iter().map(|z| (pair(z) - start).abs()).fold(0.0, f64::max))
}
