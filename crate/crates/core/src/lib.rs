#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod depth;
pub mod ekf;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod prior;
pub mod sim;

pub use error::{Error, Result};
