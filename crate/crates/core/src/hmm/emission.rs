use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Threshold on `phi` above which the rational emission branch is used.
pub const RATIONAL_PHI: f64 = 0.5;
/// Unknown-state weight in the irrational branch.
const IRRATIONAL_UNKNOWN_WEIGHT: f64 = 0.1;

/// One emission row over `[G_1..G_g, G_?, G_x]`, normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct EmissionRow(Vec<f64>);

impl EmissionRow {
    /// Normalizes arbitrary non-negative likelihoods. An all-zero row puts
    /// all its weight on the unknown state.
    pub fn normalize(raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 3 {
            return Err(Error::invalid("emission row needs at least one goal state"));
        }
        if raw.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid("emission likelihoods must be finite and non-negative"));
        }
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            Ok(EmissionRow(raw.into_iter().map(|x| x / total).collect()))
        } else {
            let mut row = vec![0.0; raw.len()];
            row[raw.len() - 2] = 1.0;
            Ok(EmissionRow(row))
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Gap between the largest and second-largest component. With a single goal
/// the second-largest is taken as 0.
pub fn delta_gap(v: &[f64]) -> f64 {
    let mut it = v.iter().copied();
    let Some(mut first) = it.next() else {
        return 0.0;
    };
    let mut second: Option<f64> = None;
    for x in it {
        if x > first {
            second = Some(first);
            first = x;
        } else if second.is_none_or(|s| x > s) {
            second = Some(x);
        }
    }
    first - second.unwrap_or(0.0)
}

/// Max component of the mean of the last `min(m, available)` vectors.
pub fn phi(history: &[Vec<f64>], m: usize) -> Result<f64> {
    if history.is_empty() || m == 0 {
        return Err(Error::precondition("phi needs at least one recorded validation vector"));
    }
    let window = &history[history.len().saturating_sub(m)..];
    Ok(mean_max(window.iter().map(Vec::as_slice), window[0].len()))
}

fn mean_max<'a>(vectors: impl ExactSizeIterator<Item = &'a [f64]>, width: usize) -> f64 {
    let count = vectors.len() as f64;
    let mut sums = vec![0.0; width];
    for v in vectors {
        for (s, x) in sums.iter_mut().zip(v) {
            *s += x;
        }
    }
    sums.into_iter().map(|s| s / count).fold(0.0, f64::max)
}

/// Builds the emission row for validation vector `v` given the rationality
/// indicator `phi`.
///
/// Rational (`phi > 0.5`): `∝ [tanh(v_1)..tanh(v_g), tanh(1 − Δ), 0]`.
/// Otherwise: `∝ [0..0, tanh(0.1), tanh(1 − phi)]`.
pub fn emission_row(v: &[f64], phi: f64) -> Result<EmissionRow> {
    if v.is_empty() {
        return Err(Error::invalid("validation vector is empty"));
    }
    if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid("validation components must lie in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::invalid("phi must lie in [0, 1]"));
    }
    let g = v.len();
    let mut raw = vec![0.0; g + 2];
    if phi > RATIONAL_PHI {
        for (r, x) in raw.iter_mut().zip(v) {
            *r = libm::tanh(*x);
        }
        raw[g] = libm::tanh(1.0 - delta_gap(v));
    } else {
        raw[g] = libm::tanh(IRRATIONAL_UNKNOWN_WEIGHT);
        raw[g + 1] = libm::tanh(1.0 - phi);
    }
    EmissionRow::normalize(raw)
}

/// Ring of the last `m` validation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceWindow {
    capacity: usize,
    vectors: VecDeque<Vec<f64>>,
}

impl EvidenceWindow {
    pub fn new(capacity: usize) -> Self {
        EvidenceWindow { capacity: capacity.max(1), vectors: VecDeque::with_capacity(capacity.max(1)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn push(&mut self, v: Vec<f64>) {
        if self.vectors.len() == self.capacity {
            self.vectors.pop_front();
        }
        self.vectors.push_back(v);
    }

    pub fn phi(&self) -> Result<f64> {
        if self.vectors.is_empty() {
            return Err(Error::precondition("phi needs at least one recorded validation vector"));
        }
        let width = self.vectors[0].len();
        Ok(mean_max(self.vectors.iter().map(Vec::as_slice), width))
    }

    /// Shrinks or grows the window, dropping the oldest vectors if needed.
    pub fn set_capacity(&mut self, capacity: usize) {
        self.capacity = capacity.max(1);
        while self.vectors.len() > self.capacity {
            self.vectors.pop_front();
        }
    }

    /// Inserts a zero component for a newly added goal at `index`.
    pub fn insert_goal(&mut self, index: usize) {
        for v in &mut self.vectors {
            v.insert(index, 0.0);
        }
    }

    pub fn remove_goal(&mut self, index: usize) {
        for v in &mut self.vectors {
            v.remove(index);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.vectors.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn phi_examples() {
        assert!((phi(&[vec![0.9, 0.0], vec![0.8, 0.0], vec![1.0, 0.0]], 3).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(phi(&[vec![0.0, 0.0], vec![0.0, 0.0]], 3).unwrap(), 0.0);
        assert!((phi(&[vec![0.2, 0.6], vec![0.4, 0.0]], 2).unwrap() - 0.3).abs() < 1e-12);
        assert!(phi(&[], 3).is_err());
    }

    #[test]
    fn phi_uses_only_last_m() {
        let h = [vec![1.0], vec![0.0], vec![0.2]];
        assert!((phi(&h, 2).unwrap() - 0.1).abs() < 1e-12);
        assert!((phi(&h, 10).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn window_matches_free_function() {
        let mut w = EvidenceWindow::new(2);
        w.push(vec![0.9, 0.1]);
        w.push(vec![0.2, 0.6]);
        w.push(vec![0.4, 0.0]);
        assert_eq!(w.len(), 2);
        assert!((w.phi().unwrap() - 0.3).abs() < 1e-12);
        w.insert_goal(1);
        assert_eq!(w.iter().next().unwrap(), &vec![0.2, 0.0, 0.6]);
        w.remove_goal(0);
        assert_eq!(w.iter().next().unwrap(), &vec![0.0, 0.6]);
        w.set_capacity(1);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn delta_gap_examples() {
        assert!((delta_gap(&[0.7, 0.2, 0.1]) - 0.5).abs() < 1e-12);
        assert_eq!(delta_gap(&[0.5, 0.5]), 0.0);
        assert_eq!(delta_gap(&[0.8]), 0.8);
        assert!((delta_gap(&[0.1, 0.3, 0.9, 0.6]) - 0.3).abs() < 1e-12);
        assert!((delta_gap(&[0.2, 0.9]) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn rational_branch() {
        let row = emission_row(&[1.0, 0.0], 0.9).unwrap();
        assert!(close(row.as_slice(), &[1.0, 0.0, 0.0, 0.0], 1e-12));

        // unnormalized [tanh .5, tanh .5, tanh 1, 0] = [0.4621, 0.4621, 0.7616, 0]
        let row = emission_row(&[0.5, 0.5], 0.9).unwrap();
        let (a, b) = (libm::tanh(0.5), libm::tanh(1.0));
        let oracle = [a / (2.0 * a + b), a / (2.0 * a + b), b / (2.0 * a + b), 0.0];
        assert!(close(row.as_slice(), &oracle, 1e-12));
        assert!(close(row.as_slice(), &[0.2741, 0.2741, 0.4518, 0.0], 1e-4));
    }

    #[test]
    fn irrational_branch() {
        let row = emission_row(&[0.3, 0.1], 0.2).unwrap();
        assert!(close(row.as_slice(), &[0.0, 0.0, 0.1305, 0.8695], 1e-4));
        // phi exactly at the threshold is not rational
        let row = emission_row(&[0.9, 0.1], 0.5).unwrap();
        assert_eq!(row.as_slice()[0], 0.0);
    }

    #[test]
    fn rows_sum_to_one() {
        for (v, p) in [(vec![0.3, 0.9, 0.1], 0.7), (vec![0.0], 0.0), (vec![1.0], 1.0)] {
            let s: f64 = emission_row(&v, p).unwrap().as_slice().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_inputs_rejected() {
        assert!(emission_row(&[1.2], 0.9).is_err());
        assert!(emission_row(&[0.5], -0.1).is_err());
        assert!(emission_row(&[], 0.9).is_err());
    }

    #[test]
    fn all_zero_row_falls_back_to_unknown() {
        let row = EmissionRow::normalize(vec![0.0; 4]).unwrap();
        assert_eq!(row.as_slice(), &[0.0, 0.0, 1.0, 0.0]);
    }
}
