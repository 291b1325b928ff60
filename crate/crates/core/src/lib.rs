//! Numerical toolkit for Gaussian quasi-helices: exact simulation,
//! pathwise fractional calculus, small-ball bounds with Monte-Carlo
//! checks, and an adapted block scheme representing a terminal value as a
//! pathwise integral.

pub mod error;
pub mod fraccalc;
pub mod harness;
pub mod models;
pub mod numfmt;
pub mod quadrature;
pub mod replicate;
pub mod sampler;
pub mod smallball;

pub use error::{Error, Result};
