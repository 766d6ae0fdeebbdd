//! Optimal-control problem model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::expr::Expr;
use crate::geometry::{span_consistency, Distribution, PfaffForm, VectorField};
use crate::sample::DEFAULT_SEED;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// `+1` for maximization, `-1` for minimization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// `∫ L(t, x, u) dt`.
    SimpleIntegral(Expr),
    /// `∫_Γ L_α dt^α`, one form per time parameter.
    Curvilinear(Vec<Expr>),
    /// `∫_Ω L dt¹…dtᵐ`.
    MultipleIntegral(Expr),
    /// `g(x(t₁))` only.
    Terminal(Expr),
    /// Elapsed time (minimum-time problems).
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostFunctional {
    pub kind: CostKind,
    /// Optional terminal term added to integral kinds.
    pub terminal: Option<Expr>,
}

impl CostFunctional {
    pub fn simple(l: Expr) -> Self {
        CostFunctional {
            kind: CostKind::SimpleIntegral(l),
            terminal: None,
        }
    }

    /// Terminal value of state component `index`.
    pub fn terminal_component(state: &[String], index: usize) -> Self {
        CostFunctional {
            kind: CostKind::Terminal(Expr::var(&state[index])),
            terminal: None,
        }
    }

    fn exprs(&self) -> Vec<&Expr> {
        let mut v: Vec<&Expr> = match &self.kind {
            CostKind::SimpleIntegral(l) | CostKind::MultipleIntegral(l) | CostKind::Terminal(l) => vec![l],
            CostKind::Curvilinear(ls) => ls.iter().collect(),
            CostKind::Time => vec![],
        };
        v.extend(self.terminal.iter());
        v
    }
}

/// Componentwise control bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ControlBox {
    pub fn unbounded(k: usize) -> Self {
        ControlBox {
            lower: vec![f64::NEG_INFINITY; k],
            upper: vec![f64::INFINITY; k],
        }
    }

    /// `[-r, r]^k`.
    pub fn symmetric(k: usize, r: f64) -> Self {
        ControlBox {
            lower: vec![-r; k],
            upper: vec![r; k],
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn is_bounded(&self, a: usize) -> bool {
        self.lower[a].is_finite() && self.upper[a].is_finite()
    }

    pub fn contains<T: Scalar>(&self, u: &[T]) -> bool {
        u.iter().enumerate().all(|(a, v)| {
            let v = v.to_f64_lossy();
            v >= self.lower[a] && v <= self.upper[a]
        })
    }

    /// Clips in place; returns whether anything moved.
    pub fn clip<T: Scalar>(&self, u: &mut [T]) -> bool {
        let mut moved = false;
        for (a, v) in u.iter_mut().enumerate() {
            let lo = T::lit(self.lower[a]);
            let hi = T::lit(self.upper[a]);
            if *v < lo {
                *v = lo;
                moved = true;
            } else if *v > hi {
                *v = hi;
                moved = true;
            }
        }
        moved
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Fixed `x(t₀)`; at `t₁` each component is either fixed or free with
    /// `p_i(t₁) = ∂g/∂x^i`.
    Transversality,
    /// `p(t₀) = p(t₁) = 0` with the free components of `x(t₀)` unknown.
    ZeroCostate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    /// Initial state; `None` marks a free component.
    pub x0: Vec<Option<f64>>,
    /// Optional target; `None` entries are free.
    pub x1: Option<Vec<Option<f64>>>,
    pub kind: BoundaryKind,
}

impl Boundary {
    pub fn fixed(x0: &[f64], x1: Option<&[f64]>) -> Self {
        Boundary {
            x0: x0.iter().copied().map(Some).collect(),
            x1: x1.map(|v| v.iter().copied().map(Some).collect()),
            kind: BoundaryKind::Transversality,
        }
    }

    /// `x0` with free components replaced by `fill`.
    pub fn x0_or(&self, fill: f64) -> Vec<f64> {
        self.x0.iter().map(|v| v.unwrap_or(fill)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Horizon {
    Interval(f64, f64),
    /// `[0, τ_1] × … × [0, τ_m]`.
    Rectangle(Vec<f64>),
}

/// A validated problem is consumed read-only by every solver.
#[derive(Debug, Clone, PartialEq)]
pub struct OCProblem {
    pub name: String,
    /// Number of time parameters.
    pub m: usize,
    pub state: Vec<String>,
    pub controls: Vec<String>,
    pub bounds: ControlBox,
    pub distribution: Distribution,
    pub cost: CostFunctional,
    pub sense: Sense,
    pub boundary: Boundary,
    pub horizon: Horizon,
    /// Explicit control laws over time and state; a law that depends on the
    /// state puts the problem in closed-loop mode.
    pub laws: BTreeMap<String, Expr>,
}

/// Problem-level diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn diag(out: &mut Vec<Diagnostic>, message: String) {
    out.push(Diagnostic { message });
}

impl OCProblem {
    /// Single-time problem with span dynamics `ẋ = u^a X_a`, one control per
    /// field, zero Lagrangian, unit horizon and unbounded controls.
    pub fn span(name: &str, state: &[&str], fields: Vec<VectorField>) -> OCProblem {
        let k = fields.len();
        let controls = if k == 1 {
            vec!["u".to_string()]
        } else {
            (1..=k).map(|a| format!("u{a}")).collect()
        };
        OCProblem::with(name, state, controls, Distribution::Span { fields, pfaff: None })
    }

    /// Two-parameter problem with span dynamics `∂_α x = u^a_α X_a`; the
    /// controls `u<a>_<α>` are ordered by `α` first.
    pub fn span_multitime(name: &str, state: &[&str], fields: Vec<VectorField>, m: usize) -> OCProblem {
        let k = fields.len();
        let controls = (1..=m)
            .flat_map(|al| (1..=k).map(move |a| format!("u{a}_{al}")))
            .collect();
        let mut p = OCProblem::with(name, state, controls, Distribution::Span { fields, pfaff: None });
        p.m = m;
        p.horizon = Horizon::Rectangle(vec![1.0; m]);
        p
    }

    /// Single-time problem with a Pfaff constraint and the given controls.
    pub fn pfaff(name: &str, state: &[&str], controls: &[&str], form: PfaffForm) -> OCProblem {
        OCProblem::with(
            name,
            state,
            controls.iter().map(|s| s.to_string()).collect(),
            Distribution::Kernel(form),
        )
    }

    fn with(name: &str, state: &[&str], controls: Vec<String>, distribution: Distribution) -> OCProblem {
        let n = state.len();
        OCProblem {
            name: name.to_string(),
            m: 1,
            state: state.iter().map(|s| s.to_string()).collect(),
            bounds: ControlBox::unbounded(controls.len()),
            controls,
            distribution,
            cost: CostFunctional::simple(Expr::zero()),
            sense: Sense::Maximize,
            boundary: Boundary::fixed(&vec![0.0; n], None),
            horizon: Horizon::Interval(0.0, 1.0),
            laws: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.state.len()
    }

    /// Names of the time parameters: `t`, or `t1 … tm`.
    pub fn time_names(&self) -> Vec<String> {
        if self.m == 1 {
            vec!["t".into()]
        } else {
            (1..=self.m).map(|a| format!("t{a}")).collect()
        }
    }

    pub fn interval(&self) -> Result<(f64, f64)> {
        match self.horizon {
            Horizon::Interval(a, b) => Ok((a, b)),
            Horizon::Rectangle(_) => Err(Error::Unsupported("rectangle horizon for a single-time solver".into())),
        }
    }

    /// Names admissible in problem expressions.
    pub fn declared(&self) -> BTreeSet<String> {
        self.time_names()
            .into_iter()
            .chain(self.state.iter().cloned())
            .chain(self.controls.iter().cloned())
            .collect()
    }

    /// Whether some explicit law depends on the state.
    pub fn closed_loop(&self) -> bool {
        self.laws.values().any(|l| self.state.iter().any(|s| l.depends_on(s)))
    }

    /// Checks every type invariant; an empty list means the problem can be
    /// handed to any solver.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let n = self.n();
        let k = self.controls.len();
        if n == 0 {
            diag(&mut out, "no state variables".into());
        }
        if self.m == 0 {
            diag(&mut out, "time dimension must be at least 1".into());
        }
        let mut seen = BTreeSet::new();
        for name in self.time_names().iter().chain(&self.state).chain(&self.controls) {
            if !seen.insert(name.clone()) {
                diag(&mut out, format!("duplicate variable name `{name}`"));
            }
        }
        if self.bounds.lower.len() != k || self.bounds.upper.len() != k {
            diag(
                &mut out,
                format!("control box has {} entries for {k} controls", self.bounds.lower.len()),
            );
        } else {
            for a in 0..k {
                if self.bounds.lower[a] > self.bounds.upper[a] || self.bounds.lower[a].is_nan() {
                    diag(&mut out, format!("empty control box for `{}`", self.controls[a]));
                }
            }
        }

        let declared = self.declared();
        let check = |what: &str, e: &Expr, allowed: &BTreeSet<String>, out: &mut Vec<Diagnostic>| {
            for v in e.free_vars() {
                if !allowed.contains(&v) {
                    diag(out, format!("undeclared variable `{v}` in {what}"));
                }
            }
        };

        match &self.distribution {
            Distribution::Kernel(w) => {
                if w.dim() != n {
                    diag(&mut out, format!("Pfaff form has {} coefficients for {n} states", w.dim()));
                }
                for (i, a) in w.coefficients().iter().enumerate() {
                    check(&format!("Pfaff coefficient {}", i + 1), a, &declared, &mut out);
                }
                if self.m == 1 && pivot(w).is_none() {
                    diag(&mut out, "Pfaff form has no nonzero constant coefficient to solve for".into());
                }
                if self.m >= 2 {
                    if n != self.m + 1 {
                        diag(&mut out, format!("multitime Pfaff graph needs n = m + 1, got n = {n}"));
                    } else if const_value(&w.coefficients()[n - 1]).is_none_or(|c| c == 0.0) {
                        diag(&mut out, "last Pfaff coefficient must be a nonzero constant".into());
                    }
                }
            }
            Distribution::Span { fields, pfaff } => {
                if fields.is_empty() {
                    diag(&mut out, "span distribution without generators".into());
                }
                if fields.len() * self.m.max(1) != k {
                    diag(&mut out, format!("{} generators need {} controls, got {k}", fields.len(), fields.len() * self.m.max(1)));
                }
                let state_set: BTreeSet<String> = self.state.iter().cloned().collect();
                for (a, f) in fields.iter().enumerate() {
                    if f.dim() != n {
                        diag(&mut out, format!("generator {} has {} components for {n} states", a + 1, f.dim()));
                    }
                    for (j, c) in f.components().iter().enumerate() {
                        check(&format!("generator {} component {}", a + 1, j + 1), c, &state_set, &mut out);
                    }
                }
                if let Some(w) = pfaff {
                    if w.dim() != n {
                        diag(&mut out, format!("Pfaff tag has {} coefficients for {n} states", w.dim()));
                    } else if fields.iter().all(|f| f.dim() == n) {
                        let vars: Vec<String> = self.state.iter().chain(&self.controls).cloned().collect();
                        match span_consistency(w, fields, &vars, DEFAULT_SEED) {
                            Ok(r) if r < 1e-10 => {}
                            Ok(r) => diag(&mut out, format!("generators leave the Pfaff kernel (|a_i X^i_a| = {r:e})")),
                            Err(e) => diag(&mut out, format!("Pfaff tag: {e}")),
                        }
                    }
                }
            }
        }

        match &self.cost.kind {
            CostKind::Curvilinear(ls) => {
                if self.m < 2 {
                    diag(&mut out, "curvilinear cost needs m >= 2".into());
                }
                if ls.len() != self.m {
                    diag(&mut out, format!("curvilinear cost has {} forms for m = {}", ls.len(), self.m));
                }
            }
            CostKind::MultipleIntegral(_) if self.m < 2 => {
                diag(&mut out, "multiple-integral cost needs m >= 2".into());
            }
            _ => {}
        }
        let cost_vars: BTreeSet<String> = declared.iter().cloned().chain(self.aux_names()).collect();
        for (i, e) in self.cost.exprs().into_iter().enumerate() {
            check(&format!("cost expression {}", i + 1), e, &cost_vars, &mut out);
        }

        let law_vars: BTreeSet<String> = self.time_names().into_iter().chain(self.state.iter().cloned()).collect();
        for (name, law) in &self.laws {
            if !self.controls.contains(name) && !self.aux_names().contains(name) {
                diag(&mut out, format!("law for undeclared control `{name}`"));
            }
            check(&format!("law for `{name}`"), law, &law_vars, &mut out);
        }

        if self.boundary.x0.len() != n {
            diag(&mut out, format!("[boundary] x0 has {} entries for {n} states", self.boundary.x0.len()));
        }
        if let Some(x1) = &self.boundary.x1 {
            if x1.len() != n {
                diag(&mut out, format!("[boundary] x1 has {} entries for {n} states", x1.len()));
            }
        }
        if self.boundary.kind == BoundaryKind::Transversality && self.boundary.x0.iter().any(Option::is_none) {
            diag(&mut out, "free initial components need the zero_costate boundary kind".into());
        }
        match &self.horizon {
            Horizon::Interval(a, b) => {
                if self.m != 1 {
                    diag(&mut out, "interval horizon for a multitime problem".into());
                }
                if !(a.is_finite() && b.is_finite() && a <= b) {
                    diag(&mut out, format!("bad horizon [{a}, {b}]"));
                }
            }
            Horizon::Rectangle(r) => {
                if r.len() != self.m {
                    diag(&mut out, format!("rectangle horizon has {} sides for m = {}", r.len(), self.m));
                }
                if r.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                    diag(&mut out, "rectangle sides must be finite and nonnegative".into());
                }
            }
        }
        out
    }

    /// Auxiliary control names introduced by the single-time Pfaff normal
    /// form (empty for span dynamics).
    pub fn aux_names(&self) -> Vec<String> {
        match &self.distribution {
            Distribution::Kernel(w) if self.m == 1 => match pivot(w) {
                Some(k) => (0..self.n())
                    .filter(|&i| i != k)
                    .map(|i| format!("w_{}", self.state[i]))
                    .collect(),
                None => Vec::new(),
            },
            _ => Vec::new(),
        }
    }

    /// Solver-facing normal form `ẋ = f(t, x, u)`.
    ///
    /// Span dynamics give `f = u^a X_a`. A Pfaff constraint `a_i dx^i = 0`
    /// is solved for a pivot coordinate `k` (a nonzero constant
    /// coefficient, preferring the last), and every other velocity becomes
    /// an auxiliary control `w_i`: `ẋ^i = w_i`, `ẋ^k = Σ (−a_i / a_k) w_i`.
    pub fn normal_form(&self) -> Result<NormalForm> {
        let n = self.n();
        match &self.distribution {
            Distribution::Span { fields, .. } => {
                let dynamics = (0..n)
                    .map(|j| {
                        Expr::sum(
                            fields
                                .iter()
                                .zip(&self.controls)
                                .map(|(f, u)| Expr::var(u) * f.component(j).clone()),
                        )
                        .simplify()
                    })
                    .collect();
                Ok(NormalForm {
                    controls: self.controls.clone(),
                    bounds: self.bounds.clone(),
                    aux: 0,
                    dynamics,
                })
            }
            Distribution::Kernel(w) => {
                if self.m != 1 {
                    return Err(Error::Unsupported("single-time normal form of a multitime problem".into()));
                }
                let k = pivot(w).ok_or_else(|| {
                    Error::Invalid("Pfaff form has no nonzero constant coefficient to solve for".into())
                })?;
                let a = w.coefficients();
                let ak = const_value(&a[k]).unwrap_or(1.0);
                let aux = self.aux_names();
                let mut controls = self.controls.clone();
                controls.extend(aux.iter().cloned());
                let mut bounds = self.bounds.clone();
                bounds.lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, aux.len()));
                bounds.upper.extend(std::iter::repeat_n(f64::INFINITY, aux.len()));
                let mut dynamics = Vec::with_capacity(n);
                let mut aux_iter = aux.iter();
                let mut pivot_terms = Vec::new();
                for i in 0..n {
                    if i == k {
                        dynamics.push(Expr::zero());
                        continue;
                    }
                    let wi = Expr::var(aux_iter.next().expect("aux control"));
                    if !a[i].is_zero() {
                        pivot_terms.push((Expr::c(-1.0 / ak) * a[i].clone()).simplify() * wi.clone());
                    }
                    dynamics.push(wi);
                }
                dynamics[k] = Expr::sum(pivot_terms).simplify();
                Ok(NormalForm {
                    controls,
                    bounds,
                    aux: aux.len(),
                    dynamics,
                })
            }
        }
    }

    /// Lagrangian of the maximization-canonical problem.
    pub fn canonical_lagrangian(&self) -> Expr {
        let l = match &self.cost.kind {
            CostKind::SimpleIntegral(l) | CostKind::MultipleIntegral(l) => l.clone(),
            CostKind::Time => Expr::one(),
            CostKind::Terminal(_) => Expr::zero(),
            CostKind::Curvilinear(ls) => ls.first().cloned().unwrap_or_else(Expr::zero),
        };
        (Expr::c(self.sense.sign()) * l).simplify()
    }

    /// Terminal payoff of the maximization-canonical problem.
    pub fn canonical_terminal(&self) -> Option<Expr> {
        let g = match (&self.cost.kind, &self.cost.terminal) {
            (CostKind::Terminal(g), Some(extra)) => Some(g + extra),
            (CostKind::Terminal(g), None) => Some(g.clone()),
            (_, t) => t.clone(),
        };
        g.map(|g| (Expr::c(self.sense.sign()) * g).simplify())
    }
}

/// Solver-facing single-time dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    /// Original controls followed by auxiliary ones.
    pub controls: Vec<String>,
    pub bounds: ControlBox,
    /// Number of auxiliary controls at the end of `controls`.
    pub aux: usize,
    pub dynamics: Vec<Expr>,
}

/// Pivot coordinate for the single-time normal form.
pub fn pivot(w: &PfaffForm) -> Option<usize> {
    w.coefficients()
        .iter()
        .rposition(|a| const_value(a).is_some_and(|c| c != 0.0 && c.is_finite()))
}

/// Value of an expression that simplifies to a constant.
pub fn const_value(e: &Expr) -> Option<f64> {
    e.simplify().as_const()
}

/// Discretized extremal data on a time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory<T> {
    pub t: Vec<T>,
    pub x: Vec<Vec<T>>,
    pub u: Vec<Vec<T>>,
    pub p: Vec<Vec<T>>,
    /// Hamiltonian samples (may be empty for external candidates).
    pub h: Vec<T>,
    /// Switching values `Q_a` per node, when a bang law produced the data.
    pub q: Option<Vec<Vec<T>>>,
    /// Non-fatal notes raised while producing the trajectory.
    pub notes: Vec<String>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Checks grid monotonicity and array shapes.
    pub fn check(&self, n: usize, k: usize) -> Result<()> {
        let len = self.t.len();
        if self.t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("time grid is not strictly increasing".into()));
        }
        let shapes = [
            ("states", &self.x, n),
            ("controls", &self.u, k),
            ("costates", &self.p, n),
        ];
        for (what, rows, width) in shapes {
            if rows.len() != len {
                return Err(Error::Invalid(format!("{what}: {} rows for {len} nodes", rows.len())));
            }
            if let Some(r) = rows.iter().find(|r| r.len() != width) {
                return Err(Error::Invalid(format!("{what}: row of width {} (expected {width})", r.len())));
            }
        }
        if !self.h.is_empty() && self.h.len() != len {
            return Err(Error::Invalid("Hamiltonian samples do not match the grid".into()));
        }
        Ok(())
    }

    /// Column `i` of the state samples.
    pub fn state_column(&self, i: usize) -> Vec<T> {
        self.x.iter().map(|r| r[i]).collect()
    }

    pub fn costate_column(&self, i: usize) -> Vec<T> {
        self.p.iter().map(|r| r[i]).collect()
    }
}
