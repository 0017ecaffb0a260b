//! Phase-space toolkit for truncated Fock-space quantum states.
//!
//! Builds density operators, evaluates the Husimi Q-function, Husimi(κ) and
//! Wigner distributions on quadrature grids, compares Weyl and Berezin
//! quantization, propagates states in time, and simulates pointer
//! measurements whose region probabilities reproduce the Born rule.

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod hermite;
pub mod marginals;
pub mod measurement;
pub mod ordering;
mod par;
pub mod phasespace;
pub mod preparation;
pub mod quadrature;
pub mod random;
pub mod special;

pub use error::{Error, Result};
pub use fock::{DensityOperator, Mode, ModeSpace, OperatorMatrix, StateVector};
pub use ordering::{LadderPolynomial, PhasePolynomial};
pub use phasespace::{DistributionKind, Measure, PhaseDistribution, PhaseGrid, PhasePoint};
