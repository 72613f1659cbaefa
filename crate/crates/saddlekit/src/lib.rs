//! Solvers and certificates for multi-block convex-concave saddle-point
//! problems with affine coupling constraints,
//!
//! ```text
//! min_x max_y  h(x) + Ψ(x,y) − g(y)   s.t.  Ax = a,  By = b,
//! ```
//!
//! where `x` and `y` are block-structured, every block lives in a simple
//! compact convex set, and the `h_i`, `g_j` are proximable. The crate
//! provides three first-order algorithms (a supergradient ADMM hybrid, an
//! extragradient ADMM hybrid, and a fully primal-dual extragradient method
//! of multipliers), approximate-saddle-point certification via a penalty
//! gap, per-iteration inequality checkers, deterministic problem
//! generators, and a benchmark CLI.
//!
//! See the `book/` guide for a narrative walk-through; its code snippets
//! run as doc-tests.

pub mod error;
pub mod linalg;
pub mod admm;
pub mod bench;
pub mod certify;
pub mod cli;
pub mod problem;
pub mod solvers;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
