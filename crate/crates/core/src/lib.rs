//! Real-time estimation of which spatial goal a person is reaching for.
//!
//! The estimator fuses head-mounted gaze direction and hand motion into a
//! per-goal validation vector, turns it into an emission row, and runs an
//! online, per-step normalized Viterbi recursion over a hidden-state space of
//! `g` goal states plus an *unknown intention* state and an *irrational* state.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! streaming server live in the `intent-runtime` crate.
//!
//! Module map:
//!
//! - [`geometry`]: gaze validation, candidate-point sampling, the modulated
//!   distance matrix and the motion validation vector.
//! - [`hmm`]: transition matrix, emission rows, online and batch Viterbi.
//! - [`session`]: a streaming estimation session with runtime goal edits.
//! - [`gesture`]: rule-based hand action classification from 21 joints.
//! - [`agent`]: point-mass robot policies driven by the estimates.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agent;
pub mod error;
pub mod geometry;
pub mod gesture;
pub mod hmm;
pub mod session;

pub use error::{Error, Result};
pub use geometry::{Goal, GoalId, GoalSet, HeadPose, SamplePattern, Vec3};
pub use hmm::{Belief, HiddenState, HmmParams, TransitionMatrix};
pub use session::{IntentEstimate, Observation, Session, SessionConfig};
