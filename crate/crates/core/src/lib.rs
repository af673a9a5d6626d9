//! Simulator and experiment harness for a cos²-nonlinear recurrent network
//! with a Boolean (0/1 mirror) readout trained by greedy single-bit flips.
//!
//! - [`timeseries`]: Mackey-Glass generation, normalization, prediction windows
//! - [`reservoir`]: the recurrent state update, coupling and input weights
//! - [`readout`]: photodiode output, normalization and the NMSE
//! - [`learner`]: biased position selection, reward-gated flips, bias bookkeeping
//! - [`analysis`]: ensemble curves, gradient split, exponential and log-log fits
//! - [`experiment`]: configs, tasks, ensembles and size sweeps
//! - [`commands`]: the file-producing operations behind the `rgreedy` binary
//! - [`plot`]: dependency-free SVG rendering

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod io;
pub mod learner;
pub mod plot;
pub mod readout;
pub mod reservoir;
pub mod stats;
pub mod timeseries;

pub use error::{Error, Result};
