//! Experiment engine: normalized maxima, empirical laws and goodness of fit.

pub mod config;
pub mod ecdf;
pub mod engine;

pub use config::{ExperimentBackend, ExperimentConfig, Gates, GridPolicy, ModelSpec, Theorem};
pub use ecdf::{dkw_bound, ks_against, ks_statistic, ks_two_sample, ks_two_sample_critical, EmpiricalCdf};
pub use engine::{run_experiment, ExperimentReport, GateOutcome, Simulator, MAX_GRID_POINTS};
