//! Summary statistics over an estimate trace.

use intent_core::{GoalId, HiddenState, IntentEstimate};
use serde::Serialize;

use crate::scenario::Visit;

/// Consecutive records above this probability count toward a commit.
pub const COMMIT_PROBABILITY: f64 = 0.5;
pub const COMMIT_RUN: usize = 10;

/// Argmax label changes between consecutive processed samples.
pub fn argmax_switches(trace: &[IntentEstimate]) -> usize {
    let labels: Vec<String> = trace.iter().filter(|e| !e.skipped).map(IntentEstimate::argmax_label).collect();
    labels.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Seconds spent with Unknown as the argmax; each record holds until the next.
pub fn time_in_unknown(trace: &[IntentEstimate]) -> f64 {
    trace.windows(2).filter(|w| w[0].argmax == HiddenState::Unknown).map(|w| w[1].t - w[0].t).sum()
}

/// Time of the record completing the first run of `COMMIT_RUN` consecutive
/// records within `[from, until]` with `p(goal) > COMMIT_PROBABILITY`.
pub fn commit_time(trace: &[IntentEstimate], goal: &GoalId, from: f64, until: f64) -> Option<f64> {
    let mut run = 0;
    for e in trace.iter().filter(|e| e.t >= from && e.t <= until) {
        if e.goal_probability(goal).unwrap_or(0.0) > COMMIT_PROBABILITY {
            run += 1;
            if run == COMMIT_RUN {
                return Some(e.t);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Commit latency per visit, measured from the visit start and rounded to
/// the nanosecond. `None` when the estimator does not commit before the
/// visit ends.
pub fn commit_latencies(trace: &[IntentEstimate], visits: &[Visit]) -> Vec<Option<f64>> {
    visits.iter().map(|v| commit_time(trace, &v.goal, v.start, v.end).map(|t| round_ns(t - v.start))).collect()
}

fn round_ns(seconds: f64) -> f64 {
    (seconds * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetrics {
    pub parameter: String,
    pub value: f64,
    pub argmax_switches: usize,
    pub time_in_unknown: f64,
    pub commit_latencies: Vec<Option<f64>>,
    /// Mean committed latency over the visits to each goal, in goal order.
    pub goal_latencies: Vec<(GoalId, Option<f64>)>,
    /// Mean over visits; a visit without a commit counts as its full
    /// duration.
    pub mean_commit_latency: Option<f64>,
    pub uncommitted_visits: usize,
}

impl SweepMetrics {
    pub fn compute(parameter: &str, value: f64, goals: &[GoalId], trace: &[IntentEstimate], visits: &[Visit]) -> Self {
        let latencies = commit_latencies(trace, visits);
        let committed: Vec<f64> = latencies.iter().flatten().copied().collect();
        let goal_latencies = goals
            .iter()
            .map(|id| {
                let own: Vec<f64> =
                    visits.iter().zip(&latencies).filter(|(v, _)| &v.goal == id).filter_map(|(_, l)| *l).collect();
                (id.clone(), (!own.is_empty()).then(|| own.iter().sum::<f64>() / own.len() as f64))
            })
            .collect();
        SweepMetrics {
            parameter: parameter.into(),
            value,
            argmax_switches: argmax_switches(trace),
            time_in_unknown: time_in_unknown(trace),
            mean_commit_latency: (!visits.is_empty()).then(|| {
                visits.iter().zip(&latencies).map(|(v, l)| l.unwrap_or(v.end - v.start)).sum::<f64>() / visits.len() as f64
            }),
            uncommitted_visits: latencies.len() - committed.len(),
            commit_latencies: latencies,
            goal_latencies,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use intent_core::session::GoalProbability;

    fn record(t: f64, p_goal: f64, skipped: bool) -> IntentEstimate {
        let goal = p_goal > 0.5;
        IntentEstimate {
            t,
            per_goal: vec![GoalProbability { id: "a".into(), p: p_goal }],
            p_unknown: 1.0 - p_goal,
            p_irrational: 0.0,
            argmax: if goal { HiddenState::Goal(0) } else { HiddenState::Unknown },
            argmax_goal: goal.then(|| "a".into()),
            phi: 0.0,
            delta_gap: 0.0,
            v: vec![],
            s: vec![],
            skipped,
            reset: false,
        }
    }

    #[test]
    fn counts_and_commit() {
        let mut trace: Vec<_> = (0..5).map(|k| record(k as f64, 0.2, false)).collect();
        trace.extend((5..20).map(|k| record(k as f64, 0.9, k == 7)));
        assert_eq!(argmax_switches(&trace), 1);
        assert!((time_in_unknown(&trace) - 5.0).abs() < 1e-12);
        assert_eq!(commit_time(&trace, &"a".into(), 0.0, 100.0), Some(14.0));
        assert_eq!(commit_time(&trace, &"a".into(), 0.0, 13.0), None);
        let visits = [Visit { goal: "a".into(), start: 2.0, end: 20.0 }];
        assert_eq!(commit_latencies(&trace, &visits), vec![Some(12.0)]);
        let m = SweepMetrics::compute("alpha", 0.3, &["a".into()], &trace[..10], &visits);
        assert_eq!(m.uncommitted_visits, 1);
        assert_eq!(m.mean_commit_latency, Some(18.0));
        assert_eq!(m.goal_latencies, vec![("a".into(), None)]);
    }
}
