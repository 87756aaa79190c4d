//! File formats, parallel aggregation and the command-line tool around
//! [`collabweight_core`].

pub mod cli;
pub mod export;
pub mod ingest;
pub mod parallel;
pub mod synth;

pub use collabweight_core as core;
