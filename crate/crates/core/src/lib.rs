//! Grid transformations with prescribed Jacobian determinant and curl.
//!
//! The crate builds maps of the unit square/cube onto itself by repeatedly
//! solving div-curl systems, and ships a small laboratory for checking the
//! inequality chain behind the uniqueness of such maps near the identity.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffops;
pub mod error;
pub mod field;
pub mod io;
pub mod monitor;
pub mod optimizer;
pub mod poisson;
pub mod synthetic;
pub mod uniqueness;

pub use error::{Error, Result};
pub use field::{GridSpec, ScalarField, Transformation, VectorField};
