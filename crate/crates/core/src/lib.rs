//! Intermediate dimensions of concentric spheres, spirals, topologist's sine
//! curves and isolated-point sets: closed-form values, constructive two-scale
//! covers, mass-distribution certificates and box-counting estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxcount;
pub mod cli;
pub mod covergen;
pub mod error;
pub mod formula;
pub mod massdist;
pub mod setlib;

pub use error::{Error, Result};
