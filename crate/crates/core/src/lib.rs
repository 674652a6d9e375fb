//! Finite-element residual and Jacobian evaluation where the user supplies
//! only pointwise physics.
//!
//! The library owns the rest: mesh topology ([`mesh`]), data layout and the
//! local/global split ([`layout`]), reference elements and quadrature
//! ([`discretization`]), and the chunked cell traversal ([`assembly`]).
//! Physics is a [`physics::PointwiseModel`] providing `f0`, `f1` and their
//! derivative blocks.

// Index loops read more clearly than iterator chains in the numerical kernels.
#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod discretization;
pub mod layout;
pub mod mesh;
pub mod mms;
pub mod physics;
pub mod solver;
