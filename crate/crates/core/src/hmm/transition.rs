use alloc::vec;
use alloc::vec::Vec;

use super::HmmParams;
use crate::error::{Error, Result};

/// Dense `(g+2)×(g+2)` row-stochastic matrix, state order `[G_1..G_g, G_?, G_x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    states: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Arbitrary square matrix with non-negative entries. Used for tests and
    /// experiments; [`build_transition`] is the model's constructor.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 3 {
            return Err(Error::invalid("transition matrix needs at least three states"));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("transition matrix must be square"));
        }
        if rows.iter().flatten().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid("transition entries must be finite and non-negative"));
        }
        Ok(TransitionMatrix { states: n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn identity(states: usize) -> Self {
        let mut data = vec![0.0; states * states];
        for i in 0..states {
            data[i * states + i] = 1.0;
        }
        TransitionMatrix { states, data }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn goal_count(&self) -> usize {
        self.states - 2
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.states + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.states..(from + 1) * self.states]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.states)
    }
}

/// Builds the goal/unknown/irrational transition structure:
///
/// ```text
/// goal i     : 1-alpha self, alpha -> unknown
/// unknown    : beta -> each goal, 1 - g*beta - gamma self, gamma -> irrational
/// irrational : delta -> unknown, 1-delta self
/// ```
pub fn build_transition(params: &HmmParams, goal_count: usize) -> Result<TransitionMatrix> {
    params.validate(goal_count)?;
    let g = goal_count;
    let n = g + 2;
    let (unknown, irrational) = (g, g + 1);
    let mut data = vec![0.0; n * n];
    for i in 0..g {
        data[i * n + i] = 1.0 - params.alpha;
        data[i * n + unknown] = params.alpha;
    }
    for j in 0..g {
        data[unknown * n + j] = params.beta;
    }
    // g*beta + gamma may exceed 1 by rounding slack only
    data[unknown * n + unknown] = (1.0 - g as f64 * params.beta - params.gamma).max(0.0);
    data[unknown * n + irrational] = params.gamma;
    data[irrational * n + unknown] = params.delta;
    data[irrational * n + irrational] = 1.0 - params.delta;
    Ok(TransitionMatrix { states: n, data })
}
