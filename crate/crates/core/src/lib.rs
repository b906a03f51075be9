//! Spectral simulator for two Josephson-coupled 2D nonlinear Schrödinger
//! components carrying Gaussian vortices.

// `!(x > y)` is used on purpose so NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod scenarios;
pub mod states;

pub use error::{Error, Result};
