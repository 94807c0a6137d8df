//! Scenario files, runs and sweeps for the `antiplane` binary.

pub mod expr;
pub mod run;
pub mod scenario;
pub mod sweep;
