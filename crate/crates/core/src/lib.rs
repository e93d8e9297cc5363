//! Simulation and analysis of update strength in the compact Genetic
//! Algorithm (cGA) and the two-ant MMAS on OneMax.
//!
//! * [`algorithm`]: the two algorithms, their update rules and the run loop.
//! * [`instrument`]: random-walk / biased-step classification and border tracking.
//! * [`analysis`]: drift bounds, potentials, exact distributions and chain oracles.
//! * [`experiments`]: reproducible Monte Carlo experiments and their file formats.

pub mod algorithm;
pub mod analysis;
mod error;
pub mod experiments;
pub mod instrument;
pub mod verify;

pub use algorithm::{
    clamp_borders, evaluate_onemax, run, sample_offspring, select_winner, Algorithm, AlgorithmState, BitVector,
    Fitness, Init, MarginalVector, OneMax, RunConfig, RunRecord, TrackedBits, UpdateRule,
};
pub use error::{Error, Result};
