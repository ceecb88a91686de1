//! Simulation and rate analysis of surface-code logical entanglement
//! distribution between two 2D qubit arrays.
//!
//! The pipeline per trial: sample which sites hold Bell pairs
//! ([`lattice`]), pick a code distance and cell and route qubits onto it
//! ([`rearrange`]), accumulate Werner and SWAP noise in a Pauli frame
//! ([`pauli`]), then decode the syndrome difference and post-select
//! ([`decode`]). [`experiment`] runs and aggregates trials; [`rates`]
//! holds the closed-form hardware model.

pub mod assignment;
pub mod blossom;
pub mod code;
pub mod config;
pub mod decode;
pub mod error;
pub mod experiment;
pub mod lattice;
pub mod pauli;
pub mod rates;
pub mod rearrange;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
