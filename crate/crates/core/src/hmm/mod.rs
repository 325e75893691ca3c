//! Hidden Markov model over `g` goal states, an unknown-intention state and an
//! irrational state, in that order.

mod emission;
mod transition;
mod viterbi;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

pub use emission::{delta_gap, emission_row, phi, EmissionRow, EvidenceWindow};
pub use transition::{build_transition, TransitionMatrix};
pub use viterbi::{batch_viterbi, viterbi_path, viterbi_step, BatchResult, Step, Trellis, DEFAULT_TRELLIS_WINDOW};

/// Tolerance used when checking `g·beta + gamma ≤ 1`.
pub const CONSTRAINT_SLACK: f64 = 1e-12;

/// Transition and evidence-window parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HmmParams {
    /// Tendency to change one's mind: goal -> unknown.
    pub alpha: f64,
    /// Unknown -> each goal.
    pub beta: f64,
    /// Unknown -> irrational.
    pub gamma: f64,
    /// Irrational -> unknown.
    pub delta: f64,
    /// Number of recent validation vectors averaged into `phi`.
    pub m: usize,
}

impl HmmParams {
    pub const DEFAULT_M: usize = 30;

    /// Checks ranges and the unknown-row constraint for `goal_count` goals.
    pub fn validate(&self, goal_count: usize) -> Result<()> {
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma), ("delta", self.delta)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Parameter(alloc::format!("{name} = {value} must lie in [0, 1]")));
            }
        }
        if self.m == 0 {
            return Err(Error::Parameter("m must be at least 1".into()));
        }
        if goal_count == 0 {
            return Err(Error::Parameter("at least one goal is required".into()));
        }
        let load = goal_count as f64 * self.beta + self.gamma;
        if load > 1.0 + CONSTRAINT_SLACK {
            return Err(Error::Parameter(alloc::format!(
                "g*beta + gamma <= 1 violated: {goal_count}*{} + {} = {load}",
                self.beta, self.gamma
            )));
        }
        Ok(())
    }
}

impl Default for HmmParams {
    fn default() -> Self {
        HmmParams { alpha: 0.3, beta: 0.05, gamma: 0.05, delta: 0.1, m: Self::DEFAULT_M }
    }
}

/// One of the `g + 2` hidden states. Goal indices are zero-based positions in
/// the current goal set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum HiddenState {
    Goal(usize),
    Unknown,
    Irrational,
}

impl HiddenState {
    pub fn index(self, goal_count: usize) -> usize {
        match self {
            HiddenState::Goal(i) => i,
            HiddenState::Unknown => goal_count,
            HiddenState::Irrational => goal_count + 1,
        }
    }

    pub fn from_index(index: usize, goal_count: usize) -> Self {
        match index {
            i if i < goal_count => HiddenState::Goal(i),
            i if i == goal_count => HiddenState::Unknown,
            _ => HiddenState::Irrational,
        }
    }
}

impl fmt::Display for HiddenState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HiddenState::Goal(i) => write!(f, "goal[{i}]"),
            HiddenState::Unknown => f.write_str("unknown"),
            HiddenState::Irrational => f.write_str("irrational"),
        }
    }
}

/// Normalized per-state scores over `[G_1..G_g, G_?, G_x]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct Belief(Vec<f64>);

impl Belief {
    /// All mass on the unknown-intention state.
    pub fn initial(goal_count: usize) -> Self {
        let mut p = vec![0.0; goal_count + 2];
        p[goal_count] = 1.0;
        Belief(p)
    }

    /// Normalizes non-negative scores. Fails when they are all zero.
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.len() < 3 {
            return Err(Error::invalid("a belief needs at least one goal state"));
        }
        if scores.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::invalid("belief scores must be finite and non-negative"));
        }
        let total: f64 = scores.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("belief scores are all zero"));
        }
        Ok(Belief(scores.into_iter().map(|s| s / total).collect()))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn state_count(&self) -> usize {
        self.0.len()
    }

    pub fn goal_count(&self) -> usize {
        self.0.len() - 2
    }

    pub fn get(&self, state: HiddenState) -> f64 {
        self.0[state.index(self.goal_count())]
    }

    /// Index of the largest component; ties go to the lowest index.
    pub fn argmax_index(&self) -> usize {
        argmax(&self.0)
    }

    pub fn argmax(&self) -> HiddenState {
        HiddenState::from_index(self.argmax_index(), self.goal_count())
    }

    pub(crate) fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Initial belief: the model starts in the unknown-intention state.
pub fn initial_belief(goal_count: usize) -> Result<Belief> {
    if goal_count == 0 {
        return Err(Error::precondition("initial belief needs at least one goal"));
    }
    Ok(Belief::initial(goal_count))
}
