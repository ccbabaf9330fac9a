//! ADER finite-volume solver for one-dimensional hyperbolic balance laws with
//! (possibly stiff) source terms.
//!
//! The predictor is an implicit Taylor expansion in time whose time
//! derivatives come from a recursive Cauchy-Kowalewskaya procedure that treats
//! the flux and source Jacobians as space-time fields. See [`ck`] for the
//! recursion and [`predictor`] for the nested Picard/Newton solve.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ck;
pub mod error;
pub mod harness;
pub mod models;
pub mod nodal;
pub mod predictor;
pub mod reconstruction;
pub mod scheme;

pub use error::{AderError, Result};
pub use models::{BalanceLaw, Matrix, State};
