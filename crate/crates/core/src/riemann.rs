//! Riemannian metrics, Christoffel symbols, geodesic vector fields and the
//! work functional `∫ g_ij X^i dx^j` along curves.

use rand::Rng;

use crate::curve::Curve;
use crate::expr::{Compiled, Expr, Vars};
use crate::geometry::VectorField;
use crate::linalg::is_positive_definite;
use crate::{Error, Result};

/// Default Simpson panels for work and length.
pub const PANELS: usize = 1000;

/// Symmetric matrix of expressions `g_ij(x)`.
#[derive(Debug, Clone)]
pub struct Metric {
    coords: Vars,
    g: Vec<Vec<Expr>>,
    compiled: Vec<Compiled>,
}

impl Metric {
    /// The lower triangle must equal the upper one after simplification;
    /// both then share the upper-triangle expressions.
    pub fn new<S: AsRef<str>>(coords: &[S], g: Vec<Vec<Expr>>) -> Result<Metric> {
        let n = coords.len();
        crate::error::check_dim("metric rows", n, g.len())?;
        for (i, row) in g.iter().enumerate() {
            crate::error::check_dim("metric row", n, row.len())?;
            for j in 0..i {
                if row[j].simplify() != g[j][i].simplify() {
                    return Err(Error::Invalid(format!("metric is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        let g: Vec<Vec<Expr>> = (0..n)
            .map(|i| (0..n).map(|j| g[i.min(j)][i.max(j)].simplify()).collect())
            .collect();
        let coords = Vars::new(coords);
        let compiled = g.iter().flatten().map(|e| Ok(e.compile(&coords)?)).collect::<Result<_>>()?;
        Ok(Metric { coords, g, compiled })
    }

    pub fn parse<S: AsRef<str>>(coords: &[S], rows: &[Vec<&str>]) -> Result<Metric> {
        let g = rows
            .iter()
            .map(|r| r.iter().map(|s| Ok(crate::parse(s, coords)?)).collect())
            .collect::<Result<_>>()?;
        Metric::new(coords, g)
    }

    pub fn diagonal<S: AsRef<str>>(coords: &[S], diag: Vec<Expr>) -> Result<Metric> {
        let n = diag.len();
        let g = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { Expr::zero() }).collect())
            .collect();
        Metric::new(coords, g)
    }

    pub fn euclidean<S: AsRef<str>>(coords: &[S]) -> Result<Metric> {
        Metric::diagonal(coords, vec![Expr::one(); coords.len()])
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn coords(&self) -> &Vars {
        &self.coords
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.g[i][j]
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.g[i][j].is_zero()))
    }

    /// Row-major `g_ij(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_dim("point", self.dim(), x.len())?;
        self.compiled.iter().map(|c| Ok(c.eval(x)?)).collect()
    }

    /// Cholesky test at `x`.
    pub fn positive_at(&self, x: &[f64]) -> Result<bool> {
        Ok(is_positive_definite(&self.eval(x)?, self.dim()))
    }

    /// `g_ij a^i b^j`.
    pub fn inner(&self, x: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
        let n = self.dim();
        let g = self.eval(x)?;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[i * n + j] * a[i] * b[j];
            }
        }
        Ok(s)
    }
}

/// Christoffel symbols of the second kind `Γ^k_ij`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    n: usize,
    // [k][i][j]
    symbols: Vec<Vec<Vec<Expr>>>,
    compiled: Vec<Compiled>,
    det: Compiled,
}

fn det_expr(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        _ => Expr::sum((0..n).filter(|&j| !m[0][j].is_zero()).map(|j| {
            let minor: Vec<Vec<Expr>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, e)| e.clone()).collect())
                .collect();
            let term = m[0][j].clone() * det_expr(&minor);
            if j % 2 == 0 {
                term
            } else {
                -term
            }
        }))
        .simplify(),
    }
}

/// Symbolic inverse by cofactors; diagonal metrics invert entrywise.
fn inverse_expr(g: &Metric) -> (Vec<Vec<Expr>>, Expr) {
    let n = g.dim();
    if g.is_diagonal() {
        let inv = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { (Expr::one() / g.g[i][i].clone()).simplify() } else { Expr::zero() })
                    .collect()
            })
            .collect();
        let det = (0..n).fold(Expr::one(), |acc, i| acc * g.g[i][i].clone()).simplify();
        return (inv, det);
    }
    let det = det_expr(&g.g);
    let inv = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| {
                    // (g^{-1})_{kl} = C_{lk} / det
                    let minor: Vec<Vec<Expr>> = (0..n)
                        .filter(|&r| r != l)
                        .map(|r| (0..n).filter(|&c| c != k).map(|c| g.g[r][c].clone()).collect())
                        .collect();
                    let c = det_expr(&minor);
                    let c = if (k + l) % 2 == 0 { c } else { -c };
                    (c / det.clone()).simplify()
                })
                .collect()
        })
        .collect();
    (inv, det)
}

/// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffel(g: &Metric) -> Result<Christoffel> {
    let n = g.dim();
    let names: Vec<String> = g.coords.names().map(str::to_string).collect();
    let d = |e: &Expr, i: usize| e.diff(&names[i]);
    let first: Vec<Vec<Vec<Expr>>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (d(&g.g[j][l], i) + d(&g.g[i][l], j) - d(&g.g[i][j], l)).simplify())
                        .collect()
                })
                .collect()
        })
        .collect();
    let (inv, det) = inverse_expr(g);
    let symbols: Vec<Vec<Vec<Expr>>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let terms = (0..n)
                                .filter(|&l| !inv[k][l].is_zero() && !first[l][i][j].is_zero())
                                .map(|l| inv[k][l].clone() * first[l][i][j].clone());
                            (Expr::c(0.5) * Expr::sum(terms)).simplify()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let compiled = symbols
        .iter()
        .flatten()
        .flatten()
        .map(|e| Ok(e.compile(&g.coords)?))
        .collect::<Result<_>>()?;
    Ok(Christoffel {
        n,
        symbols,
        compiled,
        det: det.compile(&g.coords)?,
    })
}

impl Christoffel {
    pub fn symbol(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.symbols[k][i][j]
    }

    /// `Γ^k_ij(x)` flattened `[k][i][j]`; errors where the metric is
    /// singular.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_dim("point", self.n, x.len())?;
        let det = self.det.eval(x)?;
        if det.abs() < 1e-14 {
            return Err(Error::Singular {
                what: "metric",
                condition: f64::INFINITY,
            });
        }
        self.compiled.iter().map(|c| Ok(c.eval(x)?)).collect()
    }
}

/// `(∇_X X)^k = X^i(∂_i X^k + Γ^k_ij X^j)` and `g(X, X) − 1`.
#[derive(Debug, Clone)]
pub struct GeodesicResidual {
    pub acceleration: Vec<Expr>,
    pub norm: Expr,
    compiled: Vec<Compiled>,
}

impl GeodesicResidual {
    /// Acceleration components followed by the norm defect.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.compiled.iter().map(|c| Ok(c.eval(x)?)).collect()
    }
}

pub fn geodesic_field_residual(x: &VectorField, g: &Metric) -> Result<GeodesicResidual> {
    let n = g.dim();
    crate::error::check_dim("vector field", n, x.dim())?;
    let gamma = christoffel(g)?;
    let names: Vec<String> = g.coords.names().map(str::to_string).collect();
    let xc = x.components();
    let acceleration: Vec<Expr> = (0..n)
        .map(|k| {
            let mut terms = Vec::new();
            for i in 0..n {
                if xc[i].is_zero() {
                    continue;
                }
                terms.push(xc[i].clone() * xc[k].diff(&names[i]));
                for j in 0..n {
                    if !gamma.symbols[k][i][j].is_zero() && !xc[j].is_zero() {
                        terms.push(xc[i].clone() * gamma.symbols[k][i][j].clone() * xc[j].clone());
                    }
                }
            }
            Expr::sum(terms).simplify()
        })
        .collect();
    let mut quad = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !g.g[i][j].is_zero() && !xc[i].is_zero() && !xc[j].is_zero() {
                quad.push(g.g[i][j].clone() * xc[i].clone() * xc[j].clone());
            }
        }
    }
    let norm = (Expr::sum(quad) - Expr::one()).simplify();
    let compiled = acceleration
        .iter()
        .chain(std::iter::once(&norm))
        .map(|e| Ok(e.compile(&g.coords)?))
        .collect::<Result<_>>()?;
    Ok(GeodesicResidual {
        acceleration,
        norm,
        compiled,
    })
}

/// `∫ g_ij X^i ẋ^j dτ` by composite Simpson with `panels` panels.
pub fn work_panels(x: &VectorField, g: &Metric, curve: &Curve, panels: usize) -> Result<f64> {
    crate::error::check_dim("curve", g.dim(), curve.dim())?;
    let xc = x.compile(&g.coords)?;
    curve.integrate(panels, |p, v| {
        let xv = xc.iter().map(|c| Ok(c.eval(p)?)).collect::<Result<Vec<f64>>>()?;
        g.inner(p, &xv, v)
    })
}

pub fn work(x: &VectorField, g: &Metric, curve: &Curve) -> Result<f64> {
    work_panels(x, g, curve, PANELS)
}

/// `∫ √(g_ij ẋ^i ẋ^j) dτ`.
pub fn length_panels(g: &Metric, curve: &Curve, panels: usize) -> Result<f64> {
    crate::error::check_dim("curve", g.dim(), curve.dim())?;
    curve.integrate(panels, |p, v| Ok(g.inner(p, v, v)?.max(0.0).sqrt()))
}

pub fn length(g: &Metric, curve: &Curve) -> Result<f64> {
    length_panels(g, curve, PANELS)
}

/// Field line of `X` from `x0` over `[0, t1]` as a sampled curve (RK4).
pub fn field_line(x: &VectorField, g: &Metric, x0: &[f64], t1: f64, steps: usize) -> Result<Curve> {
    let xc = x.compile(&g.coords)?;
    let grid = crate::num::linspace(0.0, t1, steps.max(2));
    let pts = crate::ode::rk4_grid(
        |_, y: &[f64], o: &mut [f64]| {
            for (oi, c) in o.iter_mut().zip(&xc) {
                *oi = c.eval(y)?;
            }
            Ok(())
        },
        &grid,
        x0,
    )?;
    Curve::sampled(grid, pts)
}

/// Sup over `steps + 1` samples of `(g_ij ∇_k X^i − g_ik ∇_j X^i) ẋ^j`.
pub fn criticality_residual(x: &VectorField, g: &Metric, curve: &Curve, steps: usize) -> Result<f64> {
    let n = g.dim();
    crate::error::check_dim("curve", n, curve.dim())?;
    let gamma = christoffel(g)?;
    let names: Vec<&str> = g.coords.names().collect();
    // ∇_k X^i as [i][k]
    let cov: Vec<Vec<Compiled>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    let mut e = x.component(i).diff(names[k]);
                    for l in 0..n {
                        e = e + gamma.symbols[i][k][l].clone() * x.component(l).clone();
                    }
                    Ok(e.simplify().compile(&g.coords)?)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let (_, pos, vel) = curve.samples(steps)?;
    let mut sup = 0.0f64;
    for (p, v) in pos.iter().zip(&vel) {
        let gm = g.eval(p)?;
        let nab: Vec<Vec<f64>> = cov
            .iter()
            .map(|r| r.iter().map(|c| Ok(c.eval(p)?)).collect())
            .collect::<Result<_>>()?;
        for k in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                for i in 0..n {
                    s += (gm[j * n + i] * nab[i][k] - gm[i * n + k] * nab[i][j]) * v[j];
                }
            }
            sup = sup.max(s.abs());
        }
    }
    Ok(sup)
}

/// Endpoint-fixed perturbations `x^i(τ) + a_i sin(m_i π s)`, `s` the
/// normalized parameter, amplitudes `|a_i| ≤ amplitude`, `m_i ∈ {1, 2, 3}`.
/// Sampled curves are perturbed at their nodes.
pub fn sinusoidal_perturbations(base: &Curve, count: usize, amplitude: f64, seed: u64) -> Result<Vec<Curve>> {
    let (t0, t1) = base.interval();
    let span = (t1 - t0).max(f64::MIN_POSITIVE);
    let mut rng = crate::sample::rng(seed);
    let mut draw = |n: usize| -> Vec<(f64, f64)> {
        (0..n)
            .map(|_| {
                let a: f64 = rng.gen_range(-amplitude..=amplitude);
                let m: u32 = rng.gen_range(1..=3);
                (a, m as f64 * std::f64::consts::PI)
            })
            .collect()
    };
    match base.components() {
        Some(comps) => {
            let param = "tau";
            let s = (Expr::var(param) - Expr::c(t0)) / Expr::c(span);
            (0..count)
                .map(|_| {
                    let c = comps
                        .iter()
                        .zip(draw(comps.len()))
                        .map(|(e, (a, w))| (e.clone() + Expr::c(a) * (Expr::c(w) * s.clone()).sin()).simplify())
                        .collect();
                    Curve::symbolic(c, param, t0, t1)
                })
                .collect()
        }
        None => {
            let (t, x, _) = base.samples(0)?;
            (0..count)
                .map(|_| {
                    let bumps = draw(base.dim());
                    let moved = t
                        .iter()
                        .zip(&x)
                        .map(|(tk, row)| {
                            let s = (tk - t0) / span;
                            row.iter().zip(&bumps).map(|(v, (a, w))| v + a * (w * s).sin()).collect()
                        })
                        .collect();
                    Curve::sampled(t.clone(), moved)
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar() -> Metric {
        Metric::parse(&["r", "th"], &[vec!["1", "0"], vec!["0", "r^2"]]).unwrap()
    }

    #[test]
    fn euclidean_symbols_vanish() {
        let g = Metric::euclidean(&["a", "b", "c"]).unwrap();
        let c = christoffel(&g).unwrap();
        assert!(c.eval(&[0.1, 0.2, 0.3]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn polar_symbols() {
        let c = christoffel(&polar()).unwrap();
        for r in [0.5, 1.0, 2.5] {
            let v = c.eval(&[r, 0.7]).unwrap();
            // [k][i][j] with n = 2
            assert!((v[2 + 1] + r).abs() < 1e-14);
            assert!((v[4 + 1] - 1.0 / r).abs() < 1e-14);
            assert!((v[4 + 2] - 1.0 / r).abs() < 1e-14);
            assert_eq!(v[0], 0.0);
        }
        assert!(matches!(c.eval(&[0.0, 0.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn conformal_symbols_match_inverse_of_full_formula() {
        // Non-diagonal metric exercises the cofactor inverse.
        let v = ["a", "b"];
        let g = Metric::parse(&v, &[vec!["2 + a^2", "a*b"], vec!["a*b", "1 + b^2"]]).unwrap();
        let c = christoffel(&g).unwrap();
        let pt = [0.3, -0.4];
        let h = 1e-6;
        let gx = |x: &[f64]| g.eval(x).unwrap();
        let dg: Vec<Vec<f64>> = (0..2)
            .map(|l| {
                let mut p = pt;
                let mut m = pt;
                p[l] += h;
                m[l] -= h;
                gx(&p).iter().zip(gx(&m)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            })
            .collect();
        let g0 = gx(&pt);
        let inv = crate::linalg::Lu::factor(&g0, 2).unwrap();
        let got = c.eval(&pt).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let rhs: Vec<f64> = (0..2)
                    .map(|l| 0.5 * (dg[i][j * 2 + l] + dg[j][i * 2 + l] - dg[l][i * 2 + j]))
                    .collect();
                let sol = inv.solve(&rhs);
                for k in 0..2 {
                    assert!((got[k * 4 + i * 2 + j] - sol[k]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn geodesic_residuals() {
        let e = Metric::euclidean(&["x", "y"]).unwrap();
        let r = geodesic_field_residual(&VectorField::coordinate(2, 0), &e).unwrap();
        assert_eq!(r.eval(&[0.4, 0.2]).unwrap(), vec![0.0, 0.0, 0.0]);
        let xf = VectorField::parse(&["x", "0"], &["x", "y"]).unwrap();
        let r = geodesic_field_residual(&xf, &e).unwrap();
        assert_eq!(r.acceleration[0].to_string(), "x");
        let radial = geodesic_field_residual(&VectorField::coordinate(2, 0), &polar()).unwrap();
        for p in [[0.5, 0.1], [2.0, -1.0]] {
            assert!(radial.eval(&p).unwrap().iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn work_and_length_on_segments() {
        let e = Metric::euclidean(&["x", "y"]).unwrap();
        let x = VectorField::coordinate(2, 0);
        let along = Curve::straight(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let across = Curve::straight(&[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((work(&x, &e, &along).unwrap() - 1.0).abs() < 1e-14);
        assert!(work(&x, &e, &across).unwrap().abs() < 1e-14);
        assert!((length(&e, &along).unwrap() - 1.0).abs() < 1e-14);
        let quarter = Curve::parse(&["cos(tau)", "sin(tau)"], "tau", 0.0, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((length(&e, &quarter).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        let point = Curve::straight(&[0.3, 0.3], &[0.3, 0.3]).unwrap();
        assert_eq!(length(&e, &point).unwrap(), 0.0);
    }

    #[test]
    fn polyline_length_converges_at_second_order() {
        let e = Metric::euclidean(&["x", "y"]).unwrap();
        let errs: Vec<f64> = [40usize, 80, 160]
            .iter()
            .map(|&k| {
                let t = crate::num::linspace(0.0, std::f64::consts::FRAC_PI_2, k);
                let x = t.iter().map(|s| vec![s.cos(), s.sin()]).collect();
                let c = Curve::sampled(t, x).unwrap();
                (length(&e, &c).unwrap() - std::f64::consts::FRAC_PI_2).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn radial_field_line_is_critical() {
        let g = polar();
        let x = VectorField::coordinate(2, 0);
        let line = Curve::parse(&["1 + tau", "0.3"], "tau", 0.0, 1.0).unwrap();
        assert!(criticality_residual(&x, &g, &line, 100).unwrap() < 1e-12);
        let sampled = field_line(&x, &g, &[1.0, 0.3], 1.0, 100).unwrap();
        assert!((work(&x, &g, &sampled).unwrap() - length(&g, &sampled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sampled_perturbations_keep_endpoints() {
        let g = polar();
        let x = VectorField::coordinate(2, 0);
        let line = field_line(&x, &g, &[1.0, 0.3], 1.0, 200).unwrap();
        let w = work(&x, &g, &line).unwrap();
        for c in sinusoidal_perturbations(&line, 5, 0.2, 7).unwrap() {
            let (_, pts, _) = c.samples(0).unwrap();
            assert!((pts[0][0] - 1.0).abs() < 1e-15 && (pts[200][0] - 2.0).abs() < 1e-12);
            assert!(work(&x, &g, &c).unwrap() <= w + 1e-9);
        }
    }
}
