//! Builds a dependency–vulnerability knowledge graph for the Cargo ecosystem
//! from registry and advisory snapshots, resolves transitive dependency trees
//! under Cargo's semver convention, and computes how disclosed
//! vulnerabilities propagate through the ecosystem.

pub mod graph;
pub mod ingest;
pub mod propagate;
pub mod resolve;
pub mod semver;
pub mod stats;

#[cfg(test)]
pub(crate) mod testfix;
