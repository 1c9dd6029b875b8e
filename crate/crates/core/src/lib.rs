//! Heat-bath algorithmic cooling of spin ensembles, simulated classically.
//!
//! The crate is split along the life cycle of a cooling experiment:
//!
//! - [`analytic`]: closed-form quantities (bias recursion, yields, step and
//!   space bounds, Chernoff success bounds, pseudo-pure-state signal, the
//!   feasibility table and timing checks).
//! - [`circuit`]: a reversible-gate engine over one molecule's bit ladder
//!   (computation row plus reset row), with step accounting, schedule
//!   validation and a line-oriented schedule text format. [`circuit::sliced`]
//!   runs the same schedules on 64 molecules at once.
//! - [`compression`]: the pairwise compression subroutine compiled to a fixed
//!   gate schedule, plus a straight-line reference implementation.
//! - [`cooling`]: the recursive cooling scheduler and its per-molecule runner.
//! - [`ensemble`]: seeded, thread-count independent Monte Carlo over many
//!   molecules and the comparison against the analytic predictions.
//! - [`cli`]: the `algocool` command-line front end.

pub mod analytic;
pub mod circuit;
pub mod cli;
pub mod compression;
pub mod cooling;
pub mod ensemble;
mod error;

pub use analytic::{Bias, CoolingPlan};
pub use circuit::{Gate, Register, Schedule};
pub use error::{Error, Result};
