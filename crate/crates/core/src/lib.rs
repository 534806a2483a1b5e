//! Exact solvers for set-structured empirical risk minimizers and the
//! Monte Carlo harness used to measure their convergence rates.

pub mod closure;
pub mod convex;
pub mod error;
pub mod flow;
pub mod harness;
pub mod erm;
pub mod isotonic;
pub mod model;
pub mod oracle;
pub mod suprema;
pub mod theory;

pub use error::{Error, Result};
