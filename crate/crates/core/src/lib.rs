// `!(x >= 0.0)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod treegen;
pub mod parking;
pub mod dist_solver;
pub mod series;
pub mod config;
pub mod harness;
pub mod repro;
pub mod cli;
