//! Numerical laboratory for threshold dynamics of the focusing inhomogeneous
//! cubic NLS in three dimensions (radial reduction),
//!
//!     i u_t + Delta u + |x|^{-b} |u|^2 u = 0,   0 < b < 1/2.
//!
//! The crate builds the ground state Q by shooting, assembles the operators
//! of the linearization around the standing wave e^{it}Q, computes the
//! unstable eigenpair, constructs the exponentially convergent special
//! solutions from a recursive profile family, evolves the equation with a
//! conservative split-step scheme, and tracks the modulation and virial
//! diagnostics that classify the threshold dynamics.

pub mod banded;
pub mod error;
pub mod grid;
pub mod ground_state;
pub mod linearized;
pub mod weight;

pub use error::{Error, Result};
