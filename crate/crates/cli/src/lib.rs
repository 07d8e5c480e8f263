//! Trip reminder service, cohort simulator and evaluation report.

pub mod analyze;
pub mod api;
pub mod app;
pub mod config;
pub mod simulate;
pub mod store;
