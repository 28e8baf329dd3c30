//! Experiment harness around `mrsav-core`: configuration, long runs with
//! checkpoints, convergence studies, diagnostics and plots.

pub mod checkpoint;
pub mod config;
pub mod convergence;
pub mod diagnose;
pub mod error;
pub mod plot;
pub mod simulation;
pub mod table;
