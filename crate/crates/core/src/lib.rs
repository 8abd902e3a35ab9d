#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod coverage;
pub mod dro;
pub mod env;
pub mod error;
pub mod experiment;
pub mod grpo;
pub mod io;
pub mod numeric;
pub mod policy;
pub mod rng;
pub mod shaping;
pub mod simplex;
pub mod train;
pub mod verify;

pub use error::{DrroError, Result};
