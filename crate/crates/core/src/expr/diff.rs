use super::{BinOp, Expr, Func};

/// Unsimplified derivative of `e` with respect to `v`.
pub(super) fn derivative(e: &Expr, v: &str) -> Expr {
    if !e.depends_on(v) {
        return Expr::zero();
    }
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(n) => Expr::c(if &**n == v { 1.0 } else { 0.0 }),
        Expr::Neg(a) => -derivative(a, v),
        Expr::Binary(op, a, b) => {
            let (a, b) = (&**a, &**b);
            match op {
                BinOp::Add => derivative(a, v) + derivative(b, v),
                BinOp::Sub => derivative(a, v) - derivative(b, v),
                BinOp::Mul => derivative(a, v) * b.clone() + a.clone() * derivative(b, v),
                BinOp::Div => {
                    (derivative(a, v) * b.clone() - a.clone() * derivative(b, v))
                        / b.clone().powi(2)
                }
                BinOp::Pow => {
                    if !b.depends_on(v) {
                        b.clone() * a.clone().pow(b.clone() - 1.0) * derivative(a, v)
                    } else {
                        e.clone()
                            * (derivative(b, v) * a.clone().ln()
                                + b.clone() * derivative(a, v) / a.clone())
                    }
                }
            }
        }
        Expr::Call(f, args) => {
            let u = &args[0];
            let du = derivative(u, v);
            let outer = match f {
                Func::Sin => u.clone().cos(),
                Func::Cos => -u.clone().sin(),
                Func::Exp => e.clone(),
                Func::Ln => return du / u.clone(),
                Func::Sqrt => return du / (2.0 * e.clone()),
                Func::Atan => 1.0 / (1.0 + u.clone().powi(2)),
                Func::Abs => u.clone().sign(),
                Func::Sign => return Expr::zero(),
            };
            outer * du
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, VarEnv};
    use super::*;

    fn at(e: &Expr, x: f64) -> f64 {
        let env: VarEnv<f64> = [("x".to_string(), x)].into_iter().collect();
        e.evaluate(&env).unwrap()
    }

    #[test]
    fn against_central_differences() {
        let h = 1e-6;
        for src in [
            "sin(x)*cos(2*x)",
            "exp(x^2)/(1+x)",
            "ln(x)*sqrt(x)",
            "atan(3*x) - x^x",
            "abs(x - 0.1)^3",
            "x^2.5 + 2^x",
        ] {
            let e = parse(src, &["x"]).unwrap();
            let d = e.diff("x");
            for x in [0.4, 0.9, 1.7] {
                let fd = (at(&e, x + h) - at(&e, x - h)) / (2.0 * h);
                let exact = at(&d, x);
                assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{src} at {x}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn simple_shapes() {
        let v = ["x", "y"];
        let d = parse("x^2*y", &v).unwrap().diff("x");
        assert_eq!(d.to_string(), "2*x*y");
        let d = parse("y^2", &v).unwrap().diff("x");
        assert!(d.is_zero());
        let d = parse("sign(x)", &v).unwrap().diff("x");
        assert!(d.is_zero());
    }
}
