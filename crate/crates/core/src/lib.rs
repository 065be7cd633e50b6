//! Half-Full/Half-Empty (HF/HE) behavioral portfolio selection.
//!
//! The crate evaluates the HF/HE functional on lotteries and portfolio
//! return distributions, solves the HF/HE portfolio problem exactly (as a
//! mixed-integer linear program) and heuristically (multi-start local
//! search), provides prospect-theory, minimum-variance, minimum-MAD and
//! equal-weight baselines, and runs rolling-window out-of-sample backtests
//! with the usual performance measures.
//!
//! Data-parallel loops (backtest windows, multistart starts, parameter
//! sweeps) run on rayon when the `parallel` feature is enabled (the
//! default); [`exec::Execution::Sequential`] forces the sequential path.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod data_io;
pub mod error;
pub mod exec;
pub mod lottery;
pub mod metrics;
pub mod objectives;
pub mod report;
pub mod solvers;

pub use error::{Error, Result};
