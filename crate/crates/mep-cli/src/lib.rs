//! Dataset IO, experiment configuration, the benchmark harness and the
//! parallel executor behind the `mep` command line.

pub mod bench;
pub mod config;
pub mod data;
pub mod exec;
