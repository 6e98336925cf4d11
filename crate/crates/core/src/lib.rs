//! Directional Fourier-ODE solver for constant-coefficient, simply-characteristic PDEs.

// NaN-rejecting `!(x > 0.0)` checks and index loops over coupled arrays are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod dirac;
pub mod directions;
pub mod domain;
pub mod error;
pub mod fields;
pub mod harness;
pub mod io;
pub mod multipliers;
pub mod ode;
pub mod poly;
pub mod roots;
pub mod tol;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
