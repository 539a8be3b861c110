//! TASE-RK time integrators with exact or inexact Jacobians, stability
//! diagrams, and stability certificates for matrix splittings `J = A + B`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagram;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod rosenbrock;
pub mod splitting;
pub mod system;
pub mod tase;

pub use error::{Error, Result};
