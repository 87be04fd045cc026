//! Coordinate exterior calculus on rectangular chart domains.
//!
//! Forms are lazy: coefficients are composed evaluators, never sampled grids,
//! so algebraic identities (alternation, graded commutativity) hold exactly
//! and only exterior derivatives and difference Jacobians introduce
//! truncation error.

pub mod combinatorics;
mod domain;
mod form;
mod map;
mod scalar;

pub use combinatorics::MultiIndex;
pub use domain::ChartDomain;
pub use form::{exterior_derivative, pullback, wedge, KForm};
pub use map::{JacobianStrategy, MatrixFn, SmoothMap, VectorFn};
pub use scalar::{Fd, Scalar};
