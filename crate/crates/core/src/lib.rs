#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod normal;
pub mod quant1d;
pub mod quantnd;
pub mod funcquant;
pub mod basis;
pub mod cli;
pub mod density;
pub mod isopt;
pub mod models;
pub mod mc;
pub mod pipeline;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
