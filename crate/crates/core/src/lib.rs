//! Stochastic quantum hydrodynamics of one-dimensional systems: quantum
//! potential, noise correlation and nonlocality lengths, regime
//! classification, and Madelung-fluid dynamics with correlated noise.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod cli;
pub mod config;
pub mod constants;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod noise;
pub mod output;
pub mod quantum;
pub mod scales;
pub mod states;
pub mod units;

pub use error::{Result, SqhaError};
