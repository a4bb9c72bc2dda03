//! Numerics for Galton-Watson branching, multiple-merger coagulation and
//! continuous-state branching limits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod gw;
pub mod levy;
pub mod measure;
pub mod numeric;
pub mod rng;
pub mod scaling;
pub mod universal;
pub mod verify;

pub use error::{Error, Result};
