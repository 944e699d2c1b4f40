//! Experiment harness for the agentopt optimizer: configuration files, paired
//! cooperating/independent runs, run artifacts and summary reports.

pub mod checks;
pub mod config;
pub mod experiment;
pub mod output;
pub mod run;
pub mod sim;
