//! Expected record sequences, the transform between source laws and
//! positive variables with all moments finite, and its inverse.

// `!(x > 0.0)` is used on purpose so that NaN fails the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distributions;
pub mod ers;
pub mod error;
pub mod moments;
pub mod numerics;
pub mod records;
pub mod transform;

pub use error::{Error, Result};
