//! Exact and approximate constructions of normalization-based networks.
//!
//! The crate provides normalization kernels, a small network intermediate
//! representation, exact compilers between network classes, a two-hidden-layer
//! Sobolev approximator built from φ_{p,q} activations, and numerical
//! verification utilities.

// Negated comparisons such as `!(x > 0.0)` are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity, clippy::too_many_arguments)]

pub mod cli;
pub mod construct;
pub mod error;
pub mod kernels;
pub mod netir;
pub mod sobolev;
pub mod verify;

pub use error::{Error, Result};
