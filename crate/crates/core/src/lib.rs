//! Exact Haar integration on SU(2) and a verification harness for the
//! convex-hull criterion on vanishing power integrals.

pub mod error;
pub mod expand;
pub mod format;
pub mod haar;
pub mod hull;
pub mod lab;
pub mod numeric;
pub mod scalar;
pub mod wigner;

pub use error::{Error, Result};
