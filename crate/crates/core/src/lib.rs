//! Numerical tools for linear consensus dynamics `x(t+1) = P x(t)`.
//!
//! The consensus value is `πᵀx(0)` where `π` is the stationary distribution
//! of the row-stochastic matrix `P`. This crate builds nested families of
//! such matrices, perturbs them on a finite community, solves for `π`, and
//! measures hitting and return times, so that the decay of `‖π⁽ⁿ⁾‖∞` can be
//! followed as the network grows.

pub mod conductance;
pub mod error;
pub mod family;
pub mod generators;
pub mod hitting;
pub mod label;
pub mod matrix;
pub mod perturb;
pub mod reduction;
pub mod scan;
pub mod sim;
pub mod smat;
pub mod srw;
pub mod stationary;
pub mod structure;
pub mod verify;

pub use error::{Error, Result};
pub use family::{FamilyFile, FamilyKind, GraphFamily};
pub use generators::LabeledMatrix;
pub use label::Label;
pub use matrix::{ProbabilityVector, SparseMatrix, StochasticMatrix};
pub use perturb::PerturbationSpec;
pub use stationary::Method;
