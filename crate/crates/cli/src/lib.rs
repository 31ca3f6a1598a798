//! Experiment driver: synthetic populations with known optima, the utility
//! experiments, privacy tables and the verification report.

pub mod account;
pub mod config;
pub mod experiments;
pub mod population;
pub mod report;
pub mod verify;
