//! Building blocks for self-evolving link and swarm experiments.
//!
//! - [`numerics`]: seeded random streams, Gaussian sampling, ridge least squares.
//! - [`phy`]: BPSK over per-symbol Rayleigh fading, zero-forcing, Monte-Carlo BER.
//! - [`evolution`]: self-adaptive differential evolution (SaDE) and an elitist GA.
//! - [`detectors`]: ELM and SaE-ELM symbol detectors.
//! - [`rendezvous`]: UAV swarm space-frequency rendezvous with Q-learning and SE-QL.

pub mod detectors;
pub mod error;
pub mod evolution;
pub mod numerics;
pub mod phy;
pub mod rendezvous;

pub use error::{Error, Result};
