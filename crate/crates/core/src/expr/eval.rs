use std::collections::HashMap;

use smallvec::SmallVec;
use thiserror::Error;

use super::{BinOp, Expr, Func, Vars};
use crate::Scalar;

/// Name → value bindings for tree-walking evaluation.
pub type VarEnv<T> = HashMap<String, T>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: &'static str },
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

fn domain<T>(e: &Expr, reason: &'static str) -> Result<T, EvalError> {
    Err(EvalError::Domain {
        expr: e.to_string(),
        reason,
    })
}

/// Applies a binary operator with the crate's domain rules.
#[inline]
fn apply_bin<T: Scalar>(op: BinOp, a: T, b: T) -> Result<T, &'static str> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == T::zero() {
                return Err("division by zero");
            }
            a / b
        }
        BinOp::Pow => {
            if a < T::zero() && b.fract() != T::zero() {
                return Err("non-integer power of a negative base");
            }
            if a == T::zero() && b < T::zero() {
                return Err("negative power of zero");
            }
            if let Some(n) = small_int(b) {
                a.powi(n)
            } else {
                a.powf(b)
            }
        }
    })
}

#[inline]
fn small_int<T: Scalar>(b: T) -> Option<i32> {
    if b.fract() == T::zero() && b.abs() <= T::lit(64.0) {
        b.to_i32()
    } else {
        None
    }
}

#[inline]
fn apply_fn<T: Scalar>(f: Func, a: T) -> Result<T, &'static str> {
    Ok(match f {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Exp => a.exp(),
        Func::Ln => {
            if a <= T::zero() {
                return Err("logarithm of a nonpositive value");
            }
            a.ln()
        }
        Func::Sqrt => {
            if a < T::zero() {
                return Err("square root of a negative value");
            }
            a.sqrt()
        }
        Func::Atan => a.atan(),
        Func::Abs => a.abs(),
        Func::Sign => a.sign0(),
    })
}

pub(super) fn evaluate<T: Scalar>(e: &Expr, env: &VarEnv<T>) -> Result<T, EvalError> {
    match e {
        Expr::Const(v) => Ok(T::lit(*v)),
        Expr::Var(n) => env
            .get(&**n)
            .copied()
            .ok_or_else(|| EvalError::Unbound(n.to_string())),
        Expr::Neg(a) => Ok(-evaluate(a, env)?),
        Expr::Binary(op, a, b) => {
            let x = evaluate(a, env)?;
            let y = evaluate(b, env)?;
            apply_bin(*op, x, y).or_else(|r| domain(e, r))
        }
        Expr::Call(f, args) => {
            let x = evaluate(&args[0], env)?;
            apply_fn(*f, x).or_else(|r| domain(e, r))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Bin(BinOp, u32),
    Call(Func, u32),
}

/// Postfix program evaluating one expression over a [`Vars`] slot layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    ops: Vec<Op>,
    // Printed subexpressions for ops that can fail, indexed by the op's tag.
    labels: Vec<String>,
    depth: usize,
    constant: Option<f64>,
}

impl Compiled {
    pub fn new(e: &Expr, vars: &Vars) -> Result<Compiled, EvalError> {
        let mut c = Compiled {
            ops: Vec::with_capacity(e.size()),
            labels: Vec::new(),
            depth: 0,
            constant: e.as_const(),
        };
        let mut depth = 0;
        c.emit(e, vars, &mut depth)?;
        Ok(c)
    }

    fn emit(&mut self, e: &Expr, vars: &Vars, depth: &mut usize) -> Result<(), EvalError> {
        match e {
            Expr::Const(v) => {
                self.ops.push(Op::Const(*v));
                *depth += 1;
            }
            Expr::Var(n) => {
                let slot = vars.get(n).ok_or_else(|| EvalError::Unbound(n.to_string()))?;
                self.ops.push(Op::Var(slot));
                *depth += 1;
            }
            Expr::Neg(a) => {
                self.emit(a, vars, depth)?;
                self.ops.push(Op::Neg);
            }
            Expr::Binary(op, a, b) => {
                self.emit(a, vars, depth)?;
                self.emit(b, vars, depth)?;
                let tag = self.label(e, matches!(op, BinOp::Div | BinOp::Pow));
                self.ops.push(Op::Bin(*op, tag));
                *depth -= 1;
            }
            Expr::Call(f, args) => {
                self.emit(&args[0], vars, depth)?;
                let tag = self.label(e, matches!(f, Func::Ln | Func::Sqrt));
                self.ops.push(Op::Call(*f, tag));
            }
        }
        self.depth = self.depth.max(*depth);
        Ok(())
    }

    fn label(&mut self, e: &Expr, fallible: bool) -> u32 {
        if fallible {
            self.labels.push(e.to_string());
            (self.labels.len() - 1) as u32
        } else {
            u32::MAX
        }
    }

    /// Constant value if the source expression was a bare constant.
    pub fn as_const(&self) -> Option<f64> {
        self.constant
    }

    pub fn eval<T: Scalar>(&self, vals: &[T]) -> Result<T, EvalError> {
        if let Some(c) = self.constant {
            return Ok(T::lit(c));
        }
        let mut stack: SmallVec<[T; 24]> = SmallVec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(v) => stack.push(T::lit(v)),
                Op::Var(i) => stack.push(vals[i]),
                Op::Neg => {
                    let a = stack.pop().expect("stack");
                    stack.push(-a);
                }
                Op::Bin(b, tag) => {
                    let y = stack.pop().expect("stack");
                    let x = stack.pop().expect("stack");
                    stack.push(apply_bin(b, x, y).map_err(|r| self.domain(tag, r))?);
                }
                Op::Call(f, tag) => {
                    let x = stack.pop().expect("stack");
                    stack.push(apply_fn(f, x).map_err(|r| self.domain(tag, r))?);
                }
            }
        }
        Ok(stack.pop().expect("stack"))
    }

    fn domain(&self, tag: u32, reason: &'static str) -> EvalError {
        EvalError::Domain {
            expr: self
                .labels
                .get(tag as usize)
                .cloned()
                .unwrap_or_else(|| "?".into()),
            reason,
        }
    }
}
