//! Iteratively reweighted least squares and Physarum dynamics for basis
//! pursuit, `min ‖x‖₁ s.t. Ax = b`.
//!
//! Both algorithms are run as projections of one damped update on the pair
//! `(y, w)` of a feasible point and a weight vector:
//!
//! ```text
//! q  = argmin { Σ xᵢ²/wᵢ : Ax = b }
//! y' = (1 − h)·y + h·q
//! w' = (1 − h)·w + h·|q|
//! ```
//!
//! With `h = 1` the `y` sequence is IRLS; with `h ∈ (0, 1)` the `w` sequence
//! is the discrete Physarum dynamics. The [`analysis`] module carries the
//! potentials used to certify convergence of the damped variant, and
//! [`oracle`] computes exact optima by enumerating basic solutions.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, trace
//! serialization and the command-line tool live in the `bpdyn` crate.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod analysis;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod trace;

pub use error::{Error, Result};
