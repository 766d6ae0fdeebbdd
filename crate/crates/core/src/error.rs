use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid problem: {0}")]
    Invalid(String),

    #[error("singular {what} (condition estimate {condition:e})")]
    Singular { what: &'static str, condition: f64 },

    #[error("stationarity solve did not converge (|H_u| = {residual:e} after {iterations} iterations)")]
    Stationarity { residual: f64, iterations: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("all-singular arc: switching function of generator {generator} vanishes on {fraction:.3} of the samples")]
    AllSingular { generator: usize, fraction: f64 },
}

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            got,
        })
    }
}
