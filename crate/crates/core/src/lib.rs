//! Desk-scale numerical laboratory for periodic homogenisation of the damped
//! semilinear wave equation
//!
//! ```text
//! ∂t²u + γ ∂t u − div(a(x/ε) ∇u) + f(u) = g
//! ```
//!
//! on intervals, rectangles and tori. The crate solves the periodic cell
//! problems and assembles homogenised matrices, builds the oscillatory and
//! homogenised elliptic operators, integrates the wave semigroups in time,
//! approximates global attractors by trajectory ensembles, measures Hausdorff
//! distances between them in several norms, and runs the discrete
//! exponential-attractor cover construction with certified bookkeeping
//! constants.
//!
//! Everything is deterministic: all randomness is seeded explicitly and
//! parallel reductions are order-independent, so repeated runs of one
//! configuration produce byte-identical outputs.

pub mod attractor;
pub mod cell;
pub mod config;
pub mod elliptic;
pub mod expattract;
pub mod fit;
pub mod grid;
pub mod sparse;
pub mod study;
pub mod wave;

mod error;

pub use error::{Error, Result};
