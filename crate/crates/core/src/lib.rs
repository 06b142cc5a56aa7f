//! Radial ground states of `−div(a(|∇u|²)∇u) = g(u)` in `ℝ^N` for operators of
//! Born–Infeld type.
//!
//! The pipeline truncates `a` beyond `|∇u|² = 1 − θ`, computes a mountain-pass critical
//! point of the truncated functional, cross-checks it by shooting, and lowers `θ` until the
//! computed solution satisfies `sup|u′| ≤ 1 − θ`, at which point it solves the original
//! equation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod interp;
pub mod linalg;
pub mod nonlinearity;
pub mod ode;
pub mod operators;
pub mod radial_space;
pub mod rootfind;
pub mod solver;

pub use error::{BisolveError, Result};
pub use nonlinearity::{MassRegime, Nonlinearity};
pub use operators::{OperatorFamily, TruncatedOperator};
pub use radial_space::{RadialGrid, RadialProfile};
