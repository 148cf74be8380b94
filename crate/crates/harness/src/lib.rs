//! Session runner, adversaries, benchmarks and the empirical privacy audit.

pub mod adversary;
pub mod audit;
pub mod bench;
pub mod config;
pub mod session;
pub mod sketch;
pub mod stats;
