//! Security games run as challenger/adversary experiments over pluggable
//! protocols, with Monte Carlo aggregation.
//!
//! Each trial owns a [`SimRng`](crate::rng::SimRng) derived from the
//! experiment seed and the trial index, so reports replay bit-exactly.

mod config;
mod game;
mod register;
mod report;

pub use config::{ExperimentConfig, PermutationEntry, Vote, VotePermutation, SCHEMA_VERSION};
pub use game::{
    default_swap, default_votes, run_exp_qint, run_exp_qpriv, run_exp_qver, AbortNotice, Adversary,
    Capabilities, HonestAdversary, InTransit, Protocol, SetupParty, TallyOutput, Tap, Verified,
    View, WithVerify,
};
pub use register::BallotRegister;
pub use report::{estimate_advantage, Experiment, TrialRecord, TrialReport};
