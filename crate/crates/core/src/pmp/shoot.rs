use crate::num::linspace;
use crate::ocp::{BoundaryKind, OCProblem, Trajectory};
use crate::solve::{newton, NewtonOptions};
use crate::{Error, Result};

use super::{build_hamiltonian, ControlLaw, HamiltonianData, ResidualReport};

#[derive(Debug, Clone, PartialEq)]
pub struct ShootOptions {
    pub newton: NewtonOptions,
    /// RK4 steps per unit time.
    pub steps_per_unit: usize,
    pub law: ControlLaw,
    /// Starting values of the unknowns (initial costate, or the free
    /// initial-state components for the zero-costate kind).
    pub guess: Option<Vec<f64>>,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            newton: NewtonOptions::default(),
            steps_per_unit: 1000,
            law: ControlLaw::Stationary,
            guess: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootOutcome {
    /// Trajectory at the best iterate.
    pub trajectory: Trajectory<f64>,
    pub report: ResidualReport,
    pub converged: bool,
    pub iterations: usize,
    /// Infinity norm of the boundary residual at the best iterate.
    pub residual: f64,
    pub condition: f64,
}

struct Setup<'a> {
    hd: &'a HamiltonianData,
    problem: &'a OCProblem,
    grid: Vec<f64>,
    law: ControlLaw,
    free_x0: Vec<usize>,
}

impl Setup<'_> {
    fn start(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.hd.n();
        match self.problem.boundary.kind {
            BoundaryKind::Transversality => (self.problem.boundary.x0_or(0.0), z.to_vec()),
            BoundaryKind::ZeroCostate => {
                let mut x0 = self.problem.boundary.x0_or(0.0);
                for (j, &i) in self.free_x0.iter().enumerate() {
                    x0[i] = z[j];
                }
                (x0, vec![0.0; n])
            }
        }
    }

    fn run(&self, z: &[f64]) -> Result<Trajectory<f64>> {
        let (x0, p0) = self.start(z);
        self.hd.integrate_extremal(&x0, &p0, self.law, &self.grid)
    }

    fn residual(&self, z: &[f64]) -> Result<Vec<f64>> {
        let n = self.hd.n();
        let tr = self.run(z)?;
        let x1 = tr.x.last().expect("nonempty grid");
        let p1 = tr.p.last().expect("nonempty grid");
        let targets = self.problem.boundary.x1.clone().unwrap_or_else(|| vec![None; n]);
        let mut r = Vec::with_capacity(n + 1);
        match self.problem.boundary.kind {
            BoundaryKind::Transversality => {
                let g = self.hd.terminal_gradient(x1)?;
                for i in 0..n {
                    r.push(match targets[i] {
                        Some(v) => x1[i] - v,
                        None => p1[i] - g[i],
                    });
                }
            }
            BoundaryKind::ZeroCostate => {
                r.extend_from_slice(p1);
                for i in 0..n {
                    if let Some(v) = targets[i] {
                        r.push(x1[i] - v);
                    }
                }
            }
        }
        Ok(r)
    }
}

/// Indirect shooting for the two-point boundary-value problem of the
/// maximum principle.
///
/// Unknowns are the initial costate for the transversality kind, or the
/// free initial-state components for the zero-costate kind. Returns the
/// best iterate with `converged = false` when the boundary residual does
/// not reach the tolerance.
pub fn shoot(problem: &OCProblem, opts: &ShootOptions) -> Result<ShootOutcome> {
    let hd = build_hamiltonian(problem)?;
    let (t0, t1) = problem.interval()?;
    let n = hd.n();
    let steps = ((t1 - t0) * opts.steps_per_unit as f64).ceil().max(1.0) as usize;
    let free_x0: Vec<usize> = (0..n).filter(|&i| problem.boundary.x0[i].is_none()).collect();
    let setup = Setup {
        hd: &hd,
        problem,
        grid: linspace(t0, t1, steps),
        law: opts.law,
        free_x0,
    };
    let unknowns = match problem.boundary.kind {
        BoundaryKind::Transversality => n,
        BoundaryKind::ZeroCostate => setup.free_x0.len(),
    };
    let z0 = match &opts.guess {
        Some(g) if g.len() == unknowns => g.clone(),
        Some(g) => {
            return Err(Error::Dimension {
                context: "shooting guess",
                expected: unknowns,
                got: g.len(),
            })
        }
        None => vec![0.0; unknowns],
    };
    let out = newton(|z| setup.residual(z), &z0, &opts.newton)?;
    let trajectory = setup.run(&out.z)?;
    let report = hd.residuals(problem, &trajectory)?;
    Ok(ShootOutcome {
        trajectory,
        report,
        converged: out.converged,
        iterations: out.iterations,
        residual: out.norm,
        condition: out.condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::VectorField;
    use crate::ocp::{Boundary, CostFunctional, Horizon};

    #[test]
    fn calculus_of_variations_line() {
        let mut p = OCProblem::span("cv", &["x"], vec![VectorField::coordinate(1, 0)]);
        p.cost = CostFunctional::simple(parse("-u^2", &["u"]).unwrap());
        p.boundary = Boundary::fixed(&[0.0], Some(&[1.0]));
        let out = shoot(&p, &ShootOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.trajectory.u.iter().all(|u| (u[0] - 1.0).abs() < 1e-9));
        assert!(out.trajectory.p.iter().all(|p| (p[0] - 2.0).abs() < 1e-9));
        assert!(out.report.max() < 1e-8, "{:?}", out.report);
    }

    #[test]
    fn unreachable_target_flags_nonconvergence() {
        let v = ["x", "y"];
        let mut p = OCProblem::span("bad", &v, vec![VectorField::coordinate(2, 0)]);
        p.cost = CostFunctional::simple(parse("-u^2", &["u"]).unwrap());
        p.boundary = Boundary::fixed(&[0.0, 0.0], Some(&[0.0, 1.0]));
        p.horizon = Horizon::Interval(0.0, 1e-3);
        let out = shoot(&p, &ShootOptions::default()).unwrap();
        assert!(!out.converged);
    }

    #[test]
    fn free_endpoint_with_terminal_payoff() {
        // max −∫u² + x(1): p ≡ 1, u = 1/2.
        let mut p = OCProblem::span("tp", &["x"], vec![VectorField::coordinate(1, 0)]);
        p.cost = CostFunctional {
            kind: crate::ocp::CostKind::SimpleIntegral(parse("-u^2", &["u"]).unwrap()),
            terminal: Some(parse("x", &["x"]).unwrap()),
        };
        let out = shoot(&p, &ShootOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.trajectory.x.last().unwrap()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_costate_kind_solves_for_initial_state() {
        // ẋ = u, H = −u² − x² + p u with p(0) = p(1) = 0 forces x ≡ 0.
        let mut p = OCProblem::span("zc", &["x"], vec![VectorField::coordinate(1, 0)]);
        p.cost = CostFunctional::simple(parse("-u^2 - x^2", &["x", "u"]).unwrap());
        p.boundary = Boundary {
            x0: vec![None],
            x1: None,
            kind: BoundaryKind::ZeroCostate,
        };
        let out = shoot(
            &p,
            &ShootOptions {
                guess: Some(vec![0.7]),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out.converged, "{}", out.residual);
        assert!(out.trajectory.x[0][0].abs() < 1e-9);
    }
}
