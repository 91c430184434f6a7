//! Exact simulator, verifier and optimizer for nonlocality distillation.
//!
//! A [`NoSignalingBox`] is a 4×4 conditional distribution `p(ab|xy)`. A
//! [`Protocol`] is a pair of local wirings that consume `n` copies of a box
//! and produce one new box; [`evaluator::distill`] computes that box exactly
//! by enumerating every joint outcome path.

pub mod analysis;
pub mod boxes;
pub mod cli;
pub mod error;
pub mod evaluator;
pub mod protocols;
pub mod search;

pub use boxes::{BoxParams, CorrelatorVector, NoSignalingBox};
pub use error::{Error, Result};
pub use protocols::{LocalStrategy, NamedProtocol, NonAdaptiveProtocol, Protocol, TruthTable};

/// Absolute tolerance used by every probability and invariant check.
pub const TOL: f64 = 1e-12;
