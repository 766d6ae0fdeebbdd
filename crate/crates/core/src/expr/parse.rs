//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | fn '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `x^-2` is `x^(-2)`.

use std::sync::Arc;

use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function `{name}` takes 1 argument, got {got} (offset {offset})")]
    Arity {
        name: String,
        got: usize,
        offset: usize,
    },
    #[error("empty variable list")]
    NoVariables,
}

impl ParseError {
    /// Byte offset of the error within the parsed text, when known.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
            ParseError::NoVariables => None,
        }
    }
}

/// Parses `text` allowing only the variable names in `vars`.
pub fn parse<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Expr, ParseError> {
    if vars.is_empty() {
        return Err(ParseError::NoVariables);
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a, S> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [S],
}

impl<S: AsRef<str>> Parser<'_, S> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn syntax(&self, message: String) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.syntax(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number".into()));
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.syntax("malformed exponent".into()));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Const).map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if self.peek() == Some(b'(') {
            let Some(func) = Func::from_name(name) else {
                return Err(ParseError::UnknownFunction {
                    name: name.to_string(),
                    offset: start,
                });
            };
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return Err(self.syntax("expected `)` or `,`".into()));
            }
            if args.len() != 1 {
                return Err(ParseError::Arity {
                    name: name.to_string(),
                    got: args.len(),
                    offset: start,
                });
            }
            return Ok(Expr::Call(func, args));
        }
        if self.vars.iter().any(|v| v.as_ref() == name) {
            Ok(Expr::Var(Arc::from(name)))
        } else {
            Err(ParseError::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_of_variable() {
        let e = parse("x2^2", &["x1", "x2"]).unwrap();
        assert_eq!(e, Expr::binary(BinOp::Pow, Expr::var("x2"), Expr::c(2.0)));
    }

    #[test]
    fn martinet_coefficient() {
        let e = parse("1/2*(y^2+u)", &["x", "y", "z", "u"]).unwrap();
        let expected = Expr::binary(
            BinOp::Mul,
            Expr::binary(BinOp::Div, Expr::c(1.0), Expr::c(2.0)),
            Expr::binary(
                BinOp::Add,
                Expr::binary(BinOp::Pow, Expr::var("y"), Expr::c(2.0)),
                Expr::var("u"),
            ),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn incomplete_input_reports_offset() {
        let err = parse("x1+", &["x1"]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier_is_named() {
        let err = parse("x + w", &["x"]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "w".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn precedence() {
        let v = ["x", "y"];
        let e = parse("-x^2", &v).unwrap();
        assert_eq!(e, -Expr::var("x").powi(2));
        let e = parse("2^3^2", &v).unwrap();
        assert_eq!(e.evaluate(&Default::default()), Ok(512.0f64));
        let e = parse("x^-2", &v).unwrap();
        assert_eq!(e, Expr::var("x").pow(-Expr::c(2.0)));
        let e = parse("1 - 2 - 3", &v).unwrap();
        assert_eq!(e.evaluate(&Default::default()), Ok(-4.0f64));
        let e = parse("8 / 4 / 2", &v).unwrap();
        assert_eq!(e.evaluate(&Default::default()), Ok(1.0f64));
        let e = parse("1 + 2 * 3", &v).unwrap();
        assert_eq!(e.evaluate(&Default::default()), Ok(7.0f64));
    }

    #[test]
    fn numbers_and_functions() {
        let v = ["x"];
        assert_eq!(parse("1.5e-3", &v).unwrap(), Expr::c(1.5e-3));
        assert_eq!(parse(".5", &v).unwrap(), Expr::c(0.5));
        assert_eq!(parse("3.", &v).unwrap(), Expr::c(3.0));
        assert_eq!(parse("sqrt(x)", &v).unwrap(), Expr::var("x").sqrt());
        assert!(matches!(
            parse("foo(x)", &v),
            Err(ParseError::UnknownFunction { .. })
        ));
        assert!(matches!(parse("sin(x, x)", &v), Err(ParseError::Arity { got: 2, .. })));
        assert!(matches!(parse("1e", &v), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("(x", &v), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("x y", &v), Err(ParseError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn empty_variable_list_rejected() {
        let none: [&str; 0] = [];
        assert_eq!(parse("1", &none), Err(ParseError::NoVariables));
    }
}
