//! Command-line front end: problem files, task dispatch, verification
//! suites and machine-readable run reports.

pub mod error;
pub mod problem;
pub mod run;
pub mod tasks;
