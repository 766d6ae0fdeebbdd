//! Vector fields, Pfaff forms, Lie brackets and the Frobenius test.

mod system;

use crate::expr::{parse, Compiled, Expr, Vars};
use crate::sample::{cloud, CLOUD_SIZE};
use crate::{error::check_dim, Error, Result};

pub use system::{ControlSystem, Feedback};

/// Components `X^i` of a vector field over named coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(comps: Vec<Expr>) -> VectorField {
        VectorField { comps }
    }

    pub fn parse<S: AsRef<str>>(texts: &[&str], vars: &[S]) -> Result<VectorField> {
        let comps = texts.iter().map(|t| parse(t, vars)).collect::<Result<_, _>>()?;
        Ok(VectorField { comps })
    }

    /// Coordinate field `∂_i` in dimension `n`.
    pub fn coordinate(n: usize, i: usize) -> VectorField {
        VectorField {
            comps: (0..n).map(|j| Expr::c(if i == j { 1.0 } else { 0.0 })).collect(),
        }
    }

    pub fn zero(n: usize) -> VectorField {
        VectorField {
            comps: vec![Expr::zero(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn scale(&self, s: &Expr) -> VectorField {
        VectorField::new(self.comps.iter().map(|c| (s * c).simplify()).collect())
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        check_dim("vector field sum", self.dim(), other.dim())?;
        Ok(VectorField::new(
            self.comps.iter().zip(&other.comps).map(|(a, b)| (a + b).simplify()).collect(),
        ))
    }

    pub fn compile(&self, vars: &Vars) -> Result<Vec<Compiled>> {
        Ok(self.comps.iter().map(|c| c.compile(vars)).collect::<Result<_, _>>()?)
    }
}

/// Pfaff form `a_i dx^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PfaffForm {
    coeffs: Vec<Expr>,
}

impl PfaffForm {
    pub fn new(coeffs: Vec<Expr>) -> Result<PfaffForm> {
        if coeffs.iter().all(Expr::is_zero) {
            return Err(Error::Invalid("Pfaff form has only zero coefficients".into()));
        }
        Ok(PfaffForm { coeffs })
    }

    pub fn parse<S: AsRef<str>>(texts: &[&str], vars: &[S]) -> Result<PfaffForm> {
        PfaffForm::new(texts.iter().map(|t| parse(t, vars)).collect::<Result<_, _>>()?)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficients(&self) -> &[Expr] {
        &self.coeffs
    }

    /// Contraction `a_i X^i`.
    pub fn pair(&self, x: &VectorField) -> Result<Expr> {
        check_dim("form/field pairing", self.dim(), x.dim())?;
        Ok(Expr::sum(self.coeffs.iter().zip(x.components()).map(|(a, c)| a * c)).simplify())
    }
}

/// A distribution given as the kernel of a form or the span of fields.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Kernel(PfaffForm),
    Span {
        fields: Vec<VectorField>,
        /// Optional form whose kernel the fields are claimed to span.
        pfaff: Option<PfaffForm>,
    },
}

impl Distribution {
    pub fn dim(&self) -> usize {
        match self {
            Distribution::Kernel(w) => w.dim(),
            Distribution::Span { fields, .. } => fields.first().map_or(0, VectorField::dim),
        }
    }
}

/// `[X, Y]^j = X^i ∂_i Y^j − Y^i ∂_i X^j` over the named coordinates.
pub fn lie_bracket<S: AsRef<str>>(x: &VectorField, y: &VectorField, coords: &[S]) -> Result<VectorField> {
    check_dim("Lie bracket", x.dim(), y.dim())?;
    check_dim("Lie bracket coordinates", x.dim(), coords.len())?;
    let n = x.dim();
    let comps = (0..n)
        .map(|j| {
            let terms = coords.iter().enumerate().flat_map(|(i, c)| {
                let c = c.as_ref();
                [
                    x.component(i) * &y.component(j).diff(c),
                    -(y.component(i) * &x.component(j).diff(c)),
                ]
            });
            Expr::sum(terms).simplify()
        })
        .collect();
    Ok(VectorField::new(comps))
}

/// Coefficient `c` of `ω ∧ dω = c dx¹∧dx²∧dx³` for a form in three
/// variables. Any other variables in the coefficients are treated as frozen
/// constants.
pub fn frobenius_coefficient<S: AsRef<str>>(w: &PfaffForm, coords: &[S]) -> Result<Expr> {
    if w.dim() != 3 || coords.len() != 3 {
        return Err(Error::Unsupported(format!(
            "Frobenius coefficient needs dimension 3, got {}",
            w.dim()
        )));
    }
    let a = w.coefficients();
    let d = |i: usize, j: usize| a[j].diff(coords[i].as_ref());
    let terms = [
        &a[0] * &(d(1, 2) - d(2, 1)).simplify(),
        &a[1] * &(d(2, 0) - d(0, 2)).simplify(),
        &a[2] * &(d(0, 1) - d(1, 0)).simplify(),
    ];
    Ok(Expr::sum(terms).simplify())
}

/// Integrability verdict for a three-dimensional form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Integrable,
    Nonholonomic,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Integrable => "integrable",
            Verdict::Nonholonomic => "nonholonomic",
        }
    }
}

/// Classifies a Frobenius coefficient as identically zero (checked on a
/// seeded cloud in `[-1,1]^k` over its free variables) or not.
pub fn frobenius_verdict(coeff: &Expr, seed: u64) -> Verdict {
    if coeff.is_zero() {
        return Verdict::Integrable;
    }
    let names: Vec<String> = coeff.free_vars().into_iter().collect();
    if names.is_empty() {
        return Verdict::Nonholonomic;
    }
    let vars = Vars::new(&names);
    let Ok(c) = coeff.compile(&vars) else {
        return Verdict::Nonholonomic;
    };
    let nonzero = cloud(names.len(), CLOUD_SIZE, seed)
        .iter()
        .any(|pt| c.eval(pt).is_ok_and(|v: f64| v.abs() > 1e-12));
    if nonzero {
        Verdict::Nonholonomic
    } else {
        Verdict::Integrable
    }
}

/// Largest `|a_i X^i_a|` over a seeded sample cloud of the given variables.
pub fn span_consistency<S: AsRef<str>>(
    w: &PfaffForm,
    fields: &[VectorField],
    vars: &[S],
    seed: u64,
) -> Result<f64> {
    let layout = Vars::new(vars);
    let pairs = fields
        .iter()
        .map(|x| w.pair(x).and_then(|e| Ok(e.compile(&layout)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for pt in cloud(vars.len(), CLOUD_SIZE, seed) {
        for c in &pairs {
            match c.eval::<f64>(&pt) {
                Ok(v) => worst = worst.max(v.abs()),
                Err(_) => continue,
            }
        }
    }
    Ok(worst)
}
