//! Barycentric Lagrange treecode.
//!
//! Computes `phi(x_i) = sum_j G(x_i, y_j) q_j` in `O(N log N)` by
//! approximating well-separated batch-cluster interactions with
//! tensor-product barycentric Lagrange interpolation at Chebyshev points.
//! The kernel enters only through point evaluations.
//!
//! Modules, bottom up:
//! - [`kernels`]: `G(x, y)` definitions
//! - [`interp`]: Chebyshev grids and the barycentric basis
//! - [`tree`]: source clusters and target batches
//! - [`moments`]: modified charges per cluster
//! - [`engine`]: acceptance criterion, interaction lists, evaluation
//! - [`decomp`]: in-process simulation of the multi-rank algorithm
//! - [`harness`]: particle generation, reference sums, benchmark records

pub mod decomp;
pub mod engine;
pub mod error;
pub mod harness;
pub mod interp;
pub mod kernels;
pub mod moments;
pub mod particles;
pub mod tree;

pub use engine::{run_treecode, EvalConfig};
pub use error::{BltcError, Result};
pub use kernels::{KernelKind, KernelSpec};
pub use particles::ParticleSystem;
