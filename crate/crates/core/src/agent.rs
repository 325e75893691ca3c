//! Point-mass robot policies driven by intent estimates.
//!
//! `ConflictAvoid` picks goals at random and abandons its current target as
//! soon as the person is estimated to be heading for it. `Teleop` drives to
//! whichever goal the person is confidently estimated to want. A `Stop`
//! gesture halts motion for the step in either mode.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{GoalId, GoalSet, Vec3};
use crate::gesture::Gesture;
use crate::hmm::HiddenState;
use crate::session::IntentEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum AgentMode {
    ConflictAvoid,
    Teleop,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct AgentConfig {
    pub mode: AgentMode,
    pub theta_conflict: f64,
    pub theta_teleop: f64,
    /// Meters per second.
    pub speed: f64,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig { mode: AgentMode::ConflictAvoid, theta_conflict: 0.5, theta_teleop: 0.7, speed: 0.2, seed: 0 }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, theta) in [("theta_conflict", self.theta_conflict), ("theta_teleop", self.theta_teleop)] {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(Error::Parameter(alloc::format!("{name} must lie in (0, 1]")));
            }
        }
        if !(self.speed >= 0.0) || !self.speed.is_finite() {
            return Err(Error::Parameter("speed must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RobotState {
    pub position: Vec3,
    pub target: Option<GoalId>,
    pub speed: f64,
    pub stopped: bool,
}

impl RobotState {
    pub fn at(position: Vec3, speed: f64) -> Self {
        RobotState { position, target: None, speed, stopped: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case", tag = "kind"))]
pub enum AgentEvent {
    /// The person is heading for the robot's target.
    Conflict { goal: GoalId, probability: f64 },
    Retarget { goal: GoalId },
    Arrived { goal: GoalId },
    /// Stop gesture seen.
    Halted,
}

/// Advances the robot by one step of `dt` seconds.
pub fn agent_step<R: Rng + ?Sized>(
    robot: &RobotState,
    est: &IntentEstimate,
    goals: &GoalSet,
    gesture: Gesture,
    dt: f64,
    config: &AgentConfig,
    rng: &mut R,
) -> Result<(RobotState, Vec<AgentEvent>)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::precondition("agent step needs dt > 0"));
    }
    if let Some(target) = &robot.target {
        if goals.index_of(target).is_none() {
            return Err(Error::Inconsistent(alloc::format!("robot target `{target}` is not a known goal")));
        }
    }
    let mut next = robot.clone();
    next.speed = config.speed;
    next.stopped = false;
    let mut events = Vec::new();
    let halted = gesture == Gesture::Stop;
    if halted {
        events.push(AgentEvent::Halted);
    }

    let destination = match config.mode {
        AgentMode::ConflictAvoid => {
            if next.target.is_none() {
                if let Some(goal) = pick_goal(goals, None, rng) {
                    events.push(AgentEvent::Retarget { goal: goal.clone() });
                    next.target = Some(goal);
                }
            }
            let current = next.target.clone();
            match current {
                Some(target) => {
                    let p = est.goal_probability(&target).unwrap_or(0.0);
                    let heading_there = est.argmax_goal.as_ref() == Some(&target);
                    if heading_there && p > config.theta_conflict {
                        events.push(AgentEvent::Conflict { goal: target.clone(), probability: p });
                        next.stopped = true;
                        next.target = pick_goal(goals, Some(&target), rng);
                        if let Some(goal) = &next.target {
                            events.push(AgentEvent::Retarget { goal: goal.clone() });
                        }
                        None
                    } else {
                        Some(target)
                    }
                }
                None => None,
            }
        }
        AgentMode::Teleop => match (&est.argmax, &est.argmax_goal) {
            (HiddenState::Goal(_), Some(goal)) if est.argmax_probability() > config.theta_teleop => {
                if next.target.as_ref() != Some(goal) {
                    events.push(AgentEvent::Retarget { goal: goal.clone() });
                    next.target = Some(goal.clone());
                }
                Some(goal.clone())
            }
            _ => None,
        },
    };

    match destination {
        Some(goal_id) if !halted => {
            let goal = goals.by_id(&goal_id).ok_or_else(|| Error::UnknownGoal(goal_id.clone()))?;
            let offset = goal.position - next.position;
            let remaining = offset.norm();
            let reach = config.speed * dt;
            if remaining <= reach {
                next.position = goal.position;
                if remaining > 0.0 {
                    events.push(AgentEvent::Arrived { goal: goal_id.clone() });
                }
                if config.mode == AgentMode::ConflictAvoid {
                    next.target = pick_goal(goals, Some(&goal_id), rng);
                    if let Some(goal) = &next.target {
                        events.push(AgentEvent::Retarget { goal: goal.clone() });
                    }
                }
            } else {
                next.position += offset * (reach / remaining);
            }
        }
        _ => next.stopped = true,
    }
    Ok((next, events))
}

/// Uniform choice among goals other than `exclude`.
fn pick_goal<R: Rng + ?Sized>(goals: &GoalSet, exclude: Option<&GoalId>, rng: &mut R) -> Option<GoalId> {
    let candidates: Vec<&GoalId> = goals.iter().map(|g| &g.id).filter(|id| Some(*id) != exclude).collect();
    if candidates.is_empty() {
        return None;
    }
    Some(candidates[rng.random_range(0..candidates.len())].clone())
}
