//! Conditional probabilities, conditional expectations and the Lueders
//! measurement map over the Hermitian part of a full complex matrix algebra.
//!
//! The building blocks live in [`algebra`]; states and the compatibility
//! relation in [`states`]; the three conditional expectations in
//! [`condexp`]; partitions and the measurement map in [`lueders`]; and the
//! randomized verification harness in [`verify`].

pub mod algebra;
pub mod condexp;
pub mod error;
pub mod lueders;
pub mod report;
pub mod states;
pub mod tol;
pub mod verify;

pub use algebra::*;
pub use error::{Error, Result};
pub use report::{Report, Residual};
pub use tol::Tolerances;
