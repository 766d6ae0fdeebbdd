use super::eval::VarEnv;
use super::{BinOp, Expr};

pub(super) fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Neg(a) => neg(simplify(a)),
        Expr::Binary(op, a, b) => binary(*op, simplify(a), simplify(b)),
        Expr::Call(f, args) => {
            let args: Vec<Expr> = args.iter().map(simplify).collect();
            let call = Expr::Call(*f, args);
            fold(&call).unwrap_or(call)
        }
    }
}

/// Evaluates a closed subtree when the result is finite.
fn fold(e: &Expr) -> Option<Expr> {
    if let Expr::Call(_, args) = e {
        if args.iter().any(|a| a.as_const().is_none()) {
            return None;
        }
    }
    match e.evaluate::<f64>(&VarEnv::new()) {
        Ok(v) if v.is_finite() => Some(Expr::Const(v)),
        _ => None,
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(v) => Expr::Const(-v),
        Expr::Neg(inner) => *inner,
        Expr::Binary(BinOp::Mul, l, r) if l.as_const().is_some() => {
            Expr::binary(BinOp::Mul, Expr::Const(-l.as_const().unwrap_or(0.0)), *r)
        }
        other => -other,
    }
}

fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
    if let (Some(_), Some(_)) = (a.as_const(), b.as_const()) {
        let e = Expr::binary(op, a, b);
        return fold(&e).unwrap_or(e);
    }
    match op {
        BinOp::Add => {
            if a.is_zero() {
                b
            } else if b.is_zero() {
                a
            } else {
                match negated(b) {
                    Ok(nb) => Expr::binary(BinOp::Sub, a, nb),
                    Err(b) => a + b,
                }
            }
        }
        BinOp::Sub => {
            if b.is_zero() {
                a
            } else if a.is_zero() {
                neg(b)
            } else {
                match negated(b) {
                    Ok(nb) => Expr::binary(BinOp::Add, a, nb),
                    Err(b) => a - b,
                }
            }
        }
        BinOp::Mul => mul(a, b),
        BinOp::Div => {
            if b.is_one() {
                a
            } else if a.is_zero() {
                Expr::zero()
            } else if let Expr::Neg(na) = a {
                neg(binary(BinOp::Div, *na, b))
            } else {
                a / b
            }
        }
        BinOp::Pow => {
            if b.is_zero() {
                Expr::one()
            } else if b.is_one() || a.is_one() {
                a
            } else {
                a.pow(b)
            }
        }
    }
}

/// `Ok(-e)` when `e` carries an explicit leading minus sign.
fn negated(e: Expr) -> Result<Expr, Expr> {
    match e {
        Expr::Neg(inner) => Ok(*inner),
        Expr::Const(c) if c < 0.0 => Ok(Expr::Const(-c)),
        Expr::Binary(BinOp::Mul, l, r) if l.as_const().is_some_and(|c| c < 0.0) => {
            Ok(mul(Expr::Const(-l.as_const().unwrap_or(0.0)), *r))
        }
        other => Err(other),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if a.is_one() {
        return b;
    }
    if b.is_one() {
        return a;
    }
    if a.as_const() == Some(-1.0) {
        return neg(b);
    }
    if b.as_const() == Some(-1.0) {
        return neg(a);
    }
    if let Expr::Neg(na) = a {
        return neg(mul(*na, b));
    }
    if let Expr::Neg(nb) = b {
        return neg(mul(a, *nb));
    }
    match (a, b) {
        (a, Expr::Const(c)) => mul(Expr::Const(c), a),
        (Expr::Const(c1), Expr::Binary(BinOp::Mul, l, r)) if l.as_const().is_some() => {
            let c2 = l.as_const().unwrap_or(1.0);
            mul(Expr::Const(c1 * c2), *r)
        }
        (Expr::Const(c), b) if c < 0.0 => neg(mul(Expr::Const(-c), b)),
        (a, b) => a * b,
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;

    fn s(src: &str) -> String {
        parse(src, &["x", "y", "u"]).unwrap().simplify().to_string()
    }

    #[test]
    fn identities() {
        assert_eq!(s("x + 0"), "x");
        assert_eq!(s("0 - x"), "-x");
        assert_eq!(s("x*1*1"), "x");
        assert_eq!(s("0*sin(x)"), "0");
        assert_eq!(s("x^1"), "x");
        assert_eq!(s("x^0"), "1");
        assert_eq!(s("x/1"), "x");
        assert_eq!(s("0/x"), "0");
        assert_eq!(s("--x"), "x");
        assert_eq!(s("x - -y"), "x + y");
        assert_eq!(s("x + -y"), "x - y");
        assert_eq!(s("x*2"), "2*x");
        assert_eq!(s("3*(2*x)"), "6*x");
        assert_eq!(s("(-1)*x"), "-x");
        assert_eq!(s("-(2*x)"), "-2*x");
        assert_eq!(s("x*(-3)"), "-3*x");
        assert_eq!(s("x*-y"), "-(x*y)");
        assert_eq!(s("y + -2*x"), "y - 2*x");
    }

    #[test]
    fn folding() {
        assert_eq!(s("1/2*(y^2 + u)"), "0.5*(y^2 + u)");
        assert_eq!(s("2^3 + sin(0)"), "8");
        // Unfoldable constants survive.
        assert_eq!(s("1/0 + x"), "1/0 + x");
        assert_eq!(s("ln(0 - 1)"), "ln(-1)");
    }
}
