//! Online max-product recursion with per-step normalization, plus a batch
//! log-domain recomputation used to cross-check it.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{argmax, Belief, EmissionRow, HiddenState, TransitionMatrix};
use crate::error::{Error, Result};

/// Default number of backpointer columns kept for path reconstruction.
pub const DEFAULT_TRELLIS_WINDOW: usize = 4096;

/// Result of one online Viterbi step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub belief: Belief,
    /// `backpointers[j]` is the best predecessor of state `j`.
    pub backpointers: Vec<usize>,
    /// All scores vanished and the belief was reset to the initial belief.
    pub reset: bool,
}

/// `score_j = max_i prev_i · T_ij · row_j`, normalized. Ties in the max go to
/// the lowest predecessor index.
pub fn viterbi_step(prev: &Belief, transition: &TransitionMatrix, row: &[f64]) -> Result<Step> {
    let n = transition.states();
    if prev.state_count() != n || row.len() != n {
        return Err(Error::InvalidInput(alloc::format!(
            "dimension mismatch: belief {}, transition {n}, emission {}",
            prev.state_count(),
            row.len()
        )));
    }
    if row.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid("emission likelihoods must be finite and non-negative"));
    }
    let p = prev.probabilities();
    let mut scores = vec![0.0; n];
    let mut backpointers = vec![0; n];
    for j in 0..n {
        let mut best = 0;
        let mut best_score = p[0] * transition.get(0, j);
        for i in 1..n {
            let s = p[i] * transition.get(i, j);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        scores[j] = best_score * row[j];
        backpointers[j] = best;
    }
    match Belief::from_scores(scores) {
        Ok(belief) => Ok(Step { belief, backpointers, reset: false }),
        Err(_) => Ok(Step { belief: Belief::initial(n - 2), backpointers, reset: true }),
    }
}

/// Bounded history of backpointer columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Trellis {
    capacity: usize,
    columns: VecDeque<Vec<usize>>,
}

impl Trellis {
    pub fn new(capacity: usize) -> Self {
        Trellis { capacity: capacity.max(1), columns: VecDeque::new() }
    }

    pub fn push(&mut self, backpointers: Vec<usize>) {
        if self.columns.len() == self.capacity {
            self.columns.pop_front();
        }
        self.columns.push_back(backpointers);
    }

    pub fn clear(&mut self) {
        self.columns.clear();
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

impl Default for Trellis {
    fn default() -> Self {
        Trellis::new(DEFAULT_TRELLIS_WINDOW)
    }
}

/// Backtraces the most probable state sequence over the retained steps,
/// ending in the argmax of `last`.
pub fn viterbi_path(trellis: &Trellis, last: &Belief) -> Result<Vec<HiddenState>> {
    if trellis.is_empty() {
        return Err(Error::precondition("no Viterbi steps recorded"));
    }
    let g = last.goal_count();
    if trellis.columns.iter().any(|c| c.len() != g + 2) {
        return Err(Error::invalid("trellis width does not match the belief"));
    }
    Ok(backtrace(trellis.columns.iter().map(Vec::as_slice), trellis.len(), last.argmax_index(), g))
}

fn backtrace<'a>(
    columns: impl DoubleEndedIterator<Item = &'a [usize]>,
    len: usize,
    last: usize,
    goal_count: usize,
) -> Vec<HiddenState> {
    let mut states = vec![0; len];
    let mut current = last;
    for (k, column) in columns.rev().enumerate() {
        states[len - 1 - k] = current;
        current = column[current];
    }
    states.into_iter().map(|i| HiddenState::from_index(i, goal_count)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub path: Vec<HiddenState>,
    pub beliefs: Vec<Belief>,
}

/// Full-trellis Viterbi in the log domain. `initial` is the belief before the
/// first emission; every row advances the chain by one transition, matching
/// the online recursion.
pub fn batch_viterbi(transition: &TransitionMatrix, initial: &Belief, rows: &[EmissionRow]) -> Result<BatchResult> {
    if rows.is_empty() {
        return Err(Error::precondition("batch Viterbi needs at least one emission row"));
    }
    let n = transition.states();
    if initial.state_count() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("dimension mismatch in batch Viterbi"));
    }
    let log_t: Vec<Vec<f64>> = transition.rows().map(|r| r.iter().map(|x| libm::log(*x)).collect()).collect();
    let log_initial: Vec<f64> = initial.probabilities().iter().map(|x| libm::log(*x)).collect();

    let mut delta = log_initial.clone();
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(rows.len());
    let mut beliefs = Vec::with_capacity(rows.len());
    let mut restart = 0;
    for (k, row) in rows.iter().enumerate() {
        let mut next = vec![f64::NEG_INFINITY; n];
        let mut back = vec![0; n];
        for j in 0..n {
            let candidates: Vec<f64> = (0..n).map(|i| delta[i] + log_t[i][j]).collect();
            let best = argmax(&candidates);
            back[j] = best;
            next[j] = candidates[best] + libm::log(row.as_slice()[j]);
        }
        let top = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            next = log_initial.clone();
            restart = k;
            beliefs.push(initial.clone());
        } else {
            let weights: Vec<f64> = next.iter().map(|x| libm::exp(x - top)).collect();
            let total: f64 = weights.iter().sum();
            beliefs.push(Belief(weights.into_iter().map(|w| w / total).collect()));
        }
        delta = next;
        columns.push(back);
    }
    let last = argmax(&delta);
    let kept = &columns[restart..];
    let path = backtrace(kept.iter().map(Vec::as_slice), kept.len(), last, n - 2);
    Ok(BatchResult { path, beliefs })
}

#[cfg(test)]
mod tests {
    use super::super::{build_transition, HmmParams};
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn identity_with_uniform_row_is_fixed_point() {
        let prev = Belief::from_scores(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let step = viterbi_step(&prev, &TransitionMatrix::identity(4), &[0.25; 4]).unwrap();
        assert!(close(step.belief.probabilities(), prev.probabilities(), 1e-15));
        assert!(!step.reset);
    }

    #[test]
    fn hand_evaluated_step() {
        let t = build_transition(&HmmParams::default(), 2).unwrap();
        let step = viterbi_step(&Belief::initial(2), &t, &[0.6, 0.1, 0.2, 0.1]).unwrap();
        // scores [0.03, 0.005, 0.17, 0.005] / 0.21
        let oracle = [0.03 / 0.21, 0.005 / 0.21, 0.17 / 0.21, 0.005 / 0.21];
        assert!(close(step.belief.probabilities(), &oracle, 1e-12));
        assert!(close(step.belief.probabilities(), &[0.1429, 0.0238, 0.8095, 0.0238], 1e-4));
        assert_eq!(step.backpointers, vec![2, 2, 2, 2]);
        let total: f64 = step.belief.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vanishing_scores_reset() {
        let t = build_transition(&HmmParams::default(), 1).unwrap();
        let prev = Belief::from_scores(vec![0.0, 0.0, 1.0]).unwrap();
        // irrational mass cannot reach goal; unknown and irrational rows are 0
        let step = viterbi_step(&prev, &t, &[1.0, 0.0, 0.0]).unwrap();
        assert!(step.reset);
        assert_eq!(step.belief, Belief::initial(1));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let t = build_transition(&HmmParams::default(), 2).unwrap();
        assert!(viterbi_step(&Belief::initial(1), &t, &[0.25; 4]).is_err());
        assert!(viterbi_step(&Belief::initial(2), &t, &[0.25; 3]).is_err());
    }

    #[test]
    fn single_step_path() {
        let mut trellis = Trellis::default();
        trellis.push(vec![2, 2, 2, 2]);
        let path = viterbi_path(&trellis, &Belief::initial(2)).unwrap();
        assert_eq!(path, vec![HiddenState::Unknown]);
        assert!(viterbi_path(&Trellis::default(), &Belief::initial(2)).is_err());
    }

    #[test]
    fn trellis_is_bounded() {
        let mut trellis = Trellis::new(3);
        for i in 0..5 {
            trellis.push(vec![i; 3]);
        }
        assert_eq!(trellis.len(), 3);
    }

    #[test]
    fn batch_base_case_with_identity() {
        let initial = Belief::from_scores(vec![0.2, 0.3, 0.5]).unwrap();
        let row = EmissionRow::normalize(vec![0.5, 0.1, 0.4]).unwrap();
        let out = batch_viterbi(&TransitionMatrix::identity(3), &initial, &[row]).unwrap();
        let raw = [0.1, 0.03, 0.2];
        let total: f64 = raw.iter().sum();
        let oracle: Vec<f64> = raw.iter().map(|x| x / total).collect();
        assert!(close(out.beliefs[0].probabilities(), &oracle, 1e-12));
        assert_eq!(out.path, vec![HiddenState::Irrational]);
    }
}
