//! Synthetic benchmarks and evaluation protocols for `zonegraph`.

pub mod baselines;
pub mod config;
pub mod generators;
pub mod hungarian;
pub mod louvain;
pub mod metrics;
pub mod protocols;
pub mod stats;
