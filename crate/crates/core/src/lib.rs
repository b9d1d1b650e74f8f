//! Symmetry-reduced incompressible Euler flow on cohomogeneity-one manifolds.

// `!(x < tol)` is used throughout so that NaN residuals fail.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod catalog;
pub mod cli;
pub mod coho;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod homogeneous;
pub mod lie;
pub mod numerics;
pub mod output;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use report::{Check, ValidationReport};
