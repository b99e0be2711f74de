//! Variational solver for a critical Schrödinger–Poisson system on `R^3`:
//!
//! ```text
//! -Δu + u - K(x) φ |u|^3 u = λ f(x) |u|^{q-2} u,    -Δφ = K(x) |u|^5
//! ```
//!
//! The Poisson equation is solved exactly through the Newtonian kernel, which
//! reduces the system to a single functional `J` on `H^1`. The crate evaluates
//! `J` and its `H^1` gradient, the closed-form constants of the existence
//! theory, and locates the mountain-pass and ball-minimizer solutions.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod error;
pub mod fft;
pub mod field;
pub mod models;
pub mod nonlocal;
pub mod quadrature;
pub mod solvers;

pub use error::{Error, Result};
pub use field::{Field, Grid3, NormReport};
pub use models::{builtin_instance, Potential, ProblemInstance, Weight};
