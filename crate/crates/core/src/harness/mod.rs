//! Experiment orchestration: config, Monte-Carlo runner, outputs.

pub mod bounds;
pub mod config;
pub mod output;
pub mod runner;
pub mod svg;
