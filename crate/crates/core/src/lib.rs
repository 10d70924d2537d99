//! Simulation of quantum e-voting protocols, the attacks against them, and
//! numerical verification of the bounds behind those attacks.
//!
//! - [`qcore`]: dense qudit state vectors, gates, measurements and the
//!   continuous phase POVM.
//! - [`harness`]: verifiability, integrity and privacy games as Monte Carlo
//!   experiments.
//! - [`dualbasis`], [`travelball`], [`distball`], [`conjcode`]: the four
//!   protocol families with their attacks and harness bindings.
//! - [`analysis`]: exact combinatorics, quadrature and tail bounds.

pub mod analysis;
pub mod conjcode;
pub mod distball;
pub mod dualbasis;
pub mod error;
pub mod harness;
pub mod qcore;
pub mod rng;
pub mod stats;
pub mod travelball;

pub use error::{Error, Result};
pub use harness::{
    Adversary, Experiment, ExperimentConfig, Protocol, TallyOutput, TrialRecord, TrialReport, Vote,
    VotePermutation,
};
pub use qcore::{Basis, MeasurementRecord, Operator, PureState};
pub use rng::SimRng;
pub use stats::Interval;
