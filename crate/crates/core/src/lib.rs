//! Numerical lab for the regularized two-phase Stefan problem with
//! p-Laplacian diffusion.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod energy;
pub mod enthalpy;
pub mod error;
pub mod geometry;
pub mod modulus;
pub mod oracle;
pub mod recurrence;
pub mod runner;
pub mod solver;

pub use error::{Error, Result};
