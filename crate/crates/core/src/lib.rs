pub mod bang;
pub mod curve;
pub mod error;
pub mod expr;
pub mod fd;
pub mod geometry;
pub mod linalg;
pub mod multitime;
pub mod num;
pub mod ocp;
pub mod ode;
pub mod pmp;
pub mod quad;
pub mod riemann;
pub mod sample;
pub mod solve;

pub use error::{Error, Result};
pub use expr::{parse, Expr, Vars};
pub use num::Scalar;

pub type Trajectory = ocp::Trajectory<f64>;
pub type Sheet = multitime::Sheet<f64>;
