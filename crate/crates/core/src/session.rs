//! A single streaming estimation session.
//!
//! Each moving observation runs the full pipeline: gaze validation, candidate
//! sampling around the previous hand position, motion validation, the
//! rationality indicator, an emission row and one Viterbi step. Stationary
//! observations (hand moved less than `epsilon_motion` since the last
//! processed sample) are reported as skipped and leave the belief untouched.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{
    gaze_validation, modulated_distance_matrix, motion_validation, sample_candidate_points, Goal, GoalId, GoalSet,
    HeadPose, SampleFrame, SamplePattern, Vec3,
};
use crate::gesture::HandSkeleton;
use crate::hmm::{
    build_transition, delta_gap, emission_row, viterbi_path, viterbi_step, Belief, EvidenceWindow, HiddenState,
    HmmParams, TransitionMatrix, Trellis, DEFAULT_TRELLIS_WINDOW,
};

/// Removing a goal that leaves less than this much mass resets the belief.
const RESET_MASS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct SessionConfig {
    pub params: HmmParams,
    pub pattern: SamplePattern,
    /// Minimum hand displacement, in meters, for a sample to be processed.
    pub epsilon_motion: f64,
    pub backpointer_window: usize,
    /// Keep every emitted estimate for [`Session::export_trace`].
    pub record_trace: bool,
}

impl SessionConfig {
    pub fn validate(&self, goal_count: usize) -> Result<()> {
        self.params.validate(goal_count)?;
        self.pattern.validate()?;
        if !(self.epsilon_motion > 0.0) || !self.epsilon_motion.is_finite() {
            return Err(Error::Parameter("epsilon_motion must be positive".into()));
        }
        if self.backpointer_window == 0 {
            return Err(Error::Parameter("backpointer_window must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            params: HmmParams::default(),
            pattern: SamplePattern::default(),
            epsilon_motion: 0.001,
            backpointer_window: DEFAULT_TRELLIS_WINDOW,
            record_trace: true,
        }
    }
}

/// One timestamped sample of head pose and hand position.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    pub t: f64,
    pub head: HeadPose,
    pub hand: Vec3,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub joints: Option<HandSkeleton>,
}

impl Observation {
    pub fn new(t: f64, head: HeadPose, hand: Vec3) -> Self {
        Observation { t, head, hand, joints: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoalProbability {
    pub id: GoalId,
    pub p: f64,
}

/// Per-step output: state probabilities plus the evidence that produced them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntentEstimate {
    pub t: f64,
    pub per_goal: Vec<GoalProbability>,
    pub p_unknown: f64,
    pub p_irrational: f64,
    pub argmax: HiddenState,
    /// Goal id of the argmax state, when it is a goal.
    pub argmax_goal: Option<GoalId>,
    pub phi: f64,
    pub delta_gap: f64,
    /// Motion validation; empty for skipped samples.
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub skipped: bool,
    /// The Viterbi scores vanished and the belief restarted from unknown.
    pub reset: bool,
}

impl IntentEstimate {
    pub fn goal_probability(&self, id: &GoalId) -> Option<f64> {
        self.per_goal.iter().find(|g| &g.id == id).map(|g| g.p)
    }

    /// Probability of the argmax state.
    pub fn argmax_probability(&self) -> f64 {
        match self.argmax {
            HiddenState::Goal(i) => self.per_goal[i].p,
            HiddenState::Unknown => self.p_unknown,
            HiddenState::Irrational => self.p_irrational,
        }
    }

    /// `unknown`, `irrational`, or the goal id.
    pub fn argmax_label(&self) -> String {
        match (&self.argmax, &self.argmax_goal) {
            (HiddenState::Goal(_), Some(id)) => id.0.clone(),
            (state, _) => alloc::format!("{state}"),
        }
    }

    pub fn total_probability(&self) -> f64 {
        self.per_goal.iter().map(|g| g.p).sum::<f64>() + self.p_unknown + self.p_irrational
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    goals: GoalSet,
    transition: TransitionMatrix,
    belief: Belief,
    window: EvidenceWindow,
    trellis: Trellis,
    previous_hand: Option<Vec3>,
    last_t: Option<f64>,
    last_phi: f64,
    last_delta: f64,
    trace: Vec<IntentEstimate>,
}

impl Session {
    pub fn new(config: SessionConfig, goals: GoalSet) -> Result<Self> {
        if goals.is_empty() {
            return Err(Error::Parameter("a session needs at least one goal".into()));
        }
        config.validate(goals.len())?;
        let transition = build_transition(&config.params, goals.len())?;
        Ok(Session {
            belief: Belief::initial(goals.len()),
            window: EvidenceWindow::new(config.params.m),
            trellis: Trellis::new(config.backpointer_window),
            transition,
            goals,
            config,
            previous_hand: None,
            last_t: None,
            last_phi: 0.0,
            last_delta: 0.0,
            trace: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn goals(&self) -> &GoalSet {
        &self.goals
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    pub fn last_timestamp(&self) -> Option<f64> {
        self.last_t
    }

    /// Estimate for the current belief without consuming an observation.
    pub fn current_estimate(&self) -> IntentEstimate {
        self.estimate(self.last_t.unwrap_or(0.0), Vec::new(), Vec::new(), true, false)
    }

    pub fn observe(&mut self, obs: &Observation) -> Result<IntentEstimate> {
        if !obs.t.is_finite() {
            return Err(Error::invalid("observation timestamp must be finite"));
        }
        if let Some(previous) = self.last_t {
            if !(obs.t > previous) {
                return Err(Error::NonMonotonic { previous, t: obs.t });
            }
        }
        if !obs.hand.is_finite() {
            return Err(Error::invalid("hand position must be finite"));
        }
        let s = gaze_validation(&obs.head, &self.goals)?;

        let moved = self
            .previous_hand
            .map(|prev| (prev, obs.hand.distance(prev)))
            .filter(|(_, r)| *r >= self.config.epsilon_motion);
        let Some((previous_hand, radius)) = moved else {
            self.last_t = Some(obs.t);
            self.previous_hand.get_or_insert(obs.hand);
            let est = self.estimate(obs.t, Vec::new(), s, true, false);
            return Ok(self.record(est));
        };

        let frame = SampleFrame::from_motion(obs.hand - previous_hand, obs.head.forward);
        let points =
            sample_candidate_points(previous_hand, radius, &self.config.pattern, &frame, self.config.epsilon_motion)?;
        let distances = modulated_distance_matrix(&points, obs.hand, &self.goals)?;
        let v = motion_validation(&distances, &s)?;

        self.window.push(v.clone());
        let phi = self.window.phi()?.min(1.0);
        let row = emission_row(&v, phi)?;
        let step = viterbi_step(&self.belief, &self.transition, row.as_slice())?;

        if step.reset {
            self.trellis.clear();
        }
        self.trellis.push(step.backpointers);
        self.belief = step.belief;
        self.last_phi = phi;
        self.last_delta = delta_gap(&v);
        self.previous_hand = Some(obs.hand);
        self.last_t = Some(obs.t);
        let est = self.estimate(obs.t, v, s, false, step.reset);
        Ok(self.record(est))
    }

    /// Most probable state sequence over the retained Viterbi steps.
    pub fn decoded_path(&self) -> Result<Vec<HiddenState>> {
        viterbi_path(&self.trellis, &self.belief)
    }

    pub fn add_goal(&mut self, goal: Goal) -> Result<()> {
        if self.goals.index_of(&goal.id).is_some() {
            return Err(Error::DuplicateGoal(goal.id));
        }
        let g = self.goals.len();
        let transition = build_transition(&self.config.params, g + 1)?;
        self.goals.push(goal)?;
        self.transition = transition;
        let mut scores = core::mem::replace(&mut self.belief, Belief::initial(g + 1)).into_inner();
        scores.insert(g, 0.0);
        self.belief = Belief::from_scores(scores).unwrap_or_else(|_| Belief::initial(g + 1));
        self.window.insert_goal(g);
        self.trellis.clear();
        Ok(())
    }

    pub fn remove_goal(&mut self, id: &GoalId) -> Result<Goal> {
        let index = self.goals.index_of(id).ok_or_else(|| Error::UnknownGoal(id.clone()))?;
        if self.goals.len() == 1 {
            return Err(Error::precondition("cannot remove the last goal of a session"));
        }
        let (_, goal) = self.goals.remove(id)?;
        let g = self.goals.len();
        self.transition = build_transition(&self.config.params, g)?;
        let mut scores = core::mem::replace(&mut self.belief, Belief::initial(g)).into_inner();
        scores.remove(index);
        let remaining: f64 = scores.iter().sum();
        if remaining >= RESET_MASS {
            self.belief = Belief::from_scores(scores).unwrap_or_else(|_| Belief::initial(g));
        }
        self.window.remove_goal(index);
        self.trellis.clear();
        Ok(goal)
    }

    /// Replaces the model parameters mid-session. Clears the path history.
    pub fn set_params(&mut self, params: HmmParams) -> Result<()> {
        let transition = build_transition(&params, self.goals.len())?;
        self.config.params = params;
        self.transition = transition;
        self.window.set_capacity(params.m);
        self.trellis.clear();
        Ok(())
    }

    /// Every estimate emitted so far, in order.
    pub fn export_trace(&self) -> &[IntentEstimate] {
        &self.trace
    }

    fn record(&mut self, est: IntentEstimate) -> IntentEstimate {
        if self.config.record_trace {
            self.trace.push(est.clone());
        }
        est
    }

    fn estimate(&self, t: f64, v: Vec<f64>, s: Vec<f64>, skipped: bool, reset: bool) -> IntentEstimate {
        let g = self.goals.len();
        let p = self.belief.probabilities();
        let argmax = self.belief.argmax();
        let argmax_goal = match argmax {
            HiddenState::Goal(i) => Some(self.goals.as_slice()[i].id.clone()),
            _ => None,
        };
        IntentEstimate {
            t,
            per_goal: self
                .goals
                .iter()
                .zip(p)
                .map(|(goal, p)| GoalProbability { id: goal.id.clone(), p: *p })
                .collect(),
            p_unknown: p[g],
            p_irrational: p[g + 1],
            argmax,
            argmax_goal,
            phi: self.last_phi,
            delta_gap: if skipped { self.last_delta } else { crate::hmm::delta_gap(&v) },
            v,
            s,
            skipped,
            reset,
        }
    }
}
