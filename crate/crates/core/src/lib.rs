//! Planar simulation of a tactile finger reaching through clutter, the
//! strategies that drive it, and the harness that runs and compares them.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod effector;
pub mod harness;
pub mod math;
pub mod physics2d;
pub mod scene;
pub mod strategies;
