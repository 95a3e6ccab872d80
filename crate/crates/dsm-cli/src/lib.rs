//! Command-line companion to `dsm-core`: configuration files, pipeline
//! stages and their on-disk formats, synthetic corpus generation, and
//! evaluation reports.

pub mod config;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod synth;
