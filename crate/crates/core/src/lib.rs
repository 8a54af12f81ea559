//! Frequency-domain full-waveform inversion of salt bodies with a
//! parametric level set.
//!
//! The level set is a sum of compactly supported radial basis functions. A
//! smoothed Heaviside of it blends a known background with a fixed salt
//! slowness, and the coefficients are fitted with adjoint-state gradients
//! from a finite-difference Helmholtz solver.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod error;
pub mod grid;
pub mod helmholtz;
pub mod inversion;
pub mod io;
pub mod levelset;
pub mod misfit;
pub mod model;
pub mod optim;
pub mod rbf;
pub mod survey;

pub use error::{Error, Result};
