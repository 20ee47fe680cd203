//! Extremes of stationary Gaussian processes: exact simulation, Pickands
//! constants, limit laws and Monte Carlo verification of limit theorems.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod covmodels;
pub mod error;
pub mod gpsim;
pub mod limitlaws;
pub mod maxstats;
pub mod pickands;

pub use error::{Error, Result};
