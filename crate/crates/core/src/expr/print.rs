use std::fmt::{self, Write};

use super::{BinOp, Expr};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Const(v) if v.is_sign_negative() && !v.is_nan() => NEG,
        Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => ATOM,
        Expr::Neg(_) => NEG,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => ADD,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => MUL,
        Expr::Binary(BinOp::Pow, ..) => POW,
    }
}

/// Shortest text that parses back to exactly `v` (for `v >= 0`).
fn write_magnitude(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.is_nan() {
        f.write_str("nan")
    } else if v.is_infinite() {
        f.write_str("1e999")
    } else if v != 0.0 && !(1e-5..1e16).contains(&v) {
        write!(f, "{v:e}")
    } else {
        write!(f, "{v}")
    }
}

fn wrapped(e: &Expr, paren: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if paren {
        f.write_char('(')?;
        write_expr(e, f)?;
        f.write_char(')')
    } else {
        write_expr(e, f)
    }
}

pub(super) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(v) => {
            if v.is_sign_negative() && !v.is_nan() {
                f.write_char('-')?;
                write_magnitude(-v, f)
            } else {
                write_magnitude(*v, f)
            }
        }
        Expr::Var(n) => f.write_str(n),
        Expr::Neg(a) => {
            f.write_char('-')?;
            wrapped(a, prec(a) < NEG, f)
        }
        Expr::Binary(op, a, b) => {
            let (sym, lmin, rmin) = match op {
                BinOp::Add => (" + ", ADD, ADD + 1),
                BinOp::Sub => (" - ", ADD, ADD + 1),
                BinOp::Mul => ("*", MUL, MUL + 1),
                BinOp::Div => ("/", MUL, MUL + 1),
                BinOp::Pow => ("^", ATOM, NEG),
            };
            wrapped(a, prec(a) < lmin, f)?;
            f.write_str(sym)?;
            wrapped(b, prec(b) < rmin, f)
        }
        Expr::Call(func, args) => {
            f.write_str(func.name())?;
            f.write_char('(')?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(a, f)?;
            }
            f.write_char(')')
        }
    }
}
