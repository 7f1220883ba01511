//! Experiments, configuration, file formats and the command line on top of
//! `bosefluct-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod io;
pub mod plot;
pub mod seed;
pub mod stats;
