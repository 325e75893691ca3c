//! Message protocol for the streaming server. One JSON object per frame,
//! each carrying `"v": 1` and a `"type"` tag.
//!
//! Error codes: 400 malformed message, 409 rejected state change (model
//! constraint, duplicate or unknown goal), 422 out-of-order timestamp.

use std::collections::VecDeque;

use intent_core::agent::{agent_step, AgentConfig, AgentEvent, RobotState};
use intent_core::geometry::{Goal, GoalId, GoalSet, HeadPose, Vec3};
use intent_core::gesture::{classify_gesture, fixtures, Gesture, HandSkeleton};
use intent_core::{Error as CoreError, HmmParams, IntentEstimate, Observation, Session, SessionConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builtins;
use crate::scenario::Scenario;

pub const PROTOCOL_VERSION: u32 = 1;
/// Hand poses kept for gesture classification.
pub const GESTURE_HISTORY: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditOp {
    Add,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioAction {
    Load,
    Start,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Observation {
        t: f64,
        head: HeadPose,
        hand: Vec3,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        joints: Option<HandSkeleton>,
    },
    GoalEdit {
        op: EditOp,
        /// Required for `add`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        goal: Option<Goal>,
        /// Required for `remove`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<GoalId>,
    },
    /// Any subset of the model parameters.
    ParamUpdate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
    },
    /// `null` agent disables the robot.
    ModeToggle { agent: Option<AgentConfig> },
    GesturePose {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        skeleton: Option<HandSkeleton>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fixture: Option<fixtures::Named>,
    },
    ScenarioControl {
        action: ScenarioAction,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotBody {
    pub goals: Vec<Goal>,
    pub config: SessionConfig,
    pub agent: Option<AgentConfig>,
    pub robot: Option<RobotState>,
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Estimate { estimate: IntentEstimate },
    RobotUpdate { robot: RobotState, events: Vec<AgentEvent> },
    GestureLabel { gesture: Gesture },
    Error { code: u16, detail: String },
    Snapshot(SnapshotBody),
}

impl ServerMessage {
    fn error(code: u16, detail: impl Into<String>) -> Self {
        ServerMessage::Error { code, detail: detail.into() }
    }

    /// Wire encoding with the version field.
    pub fn encode(&self) -> String {
        let mut value = serde_json::to_value(self).expect("server message serializes");
        value.as_object_mut().expect("tagged object").insert("v".into(), PROTOCOL_VERSION.into());
        value.to_string()
    }
}

impl ClientMessage {
    pub fn encode(&self) -> String {
        let mut value = serde_json::to_value(self).expect("client message serializes");
        value.as_object_mut().expect("tagged object").insert("v".into(), PROTOCOL_VERSION.into());
        value.to_string()
    }

    /// Decodes one frame, checking the version field.
    pub fn decode(text: &str) -> Result<ClientMessage, String> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
        let object = value.as_object_mut().ok_or("message must be a JSON object")?;
        match object.remove("v") {
            Some(v) if v.as_u64() == Some(u64::from(PROTOCOL_VERSION)) => {}
            Some(v) => return Err(format!("unsupported protocol version {v}")),
            None => return Err("missing protocol version field `v`".into()),
        }
        serde_json::from_value(value).map_err(|e| e.to_string())
    }
}

fn code_for(e: &CoreError) -> u16 {
    match e {
        CoreError::NonMonotonic { .. } => 422,
        CoreError::Parameter(_)
        | CoreError::DuplicateGoal(_)
        | CoreError::UnknownGoal(_)
        | CoreError::Precondition(_)
        | CoreError::Inconsistent(_) => 409,
        CoreError::InvalidInput(_) | CoreError::UndefinedPose(_) => 400,
    }
}

fn core_error(e: CoreError) -> ServerMessage {
    ServerMessage::error(code_for(&e), e.to_string())
}

struct Agent {
    config: AgentConfig,
    robot: RobotState,
    rng: ChaCha8Rng,
}

/// Robot start position: between the person and the goals.
const ROBOT_HOME: Vec3 = Vec3::new(0.8, 0.0, 0.8);

/// Per-connection state. Every method is synchronous; the server calls them
/// in frame order.
pub struct Connection {
    session: Session,
    agent: Option<Agent>,
    gestures: VecDeque<HandSkeleton>,
    gesture: Gesture,
    scenario: Option<Scenario>,
    playback: VecDeque<Observation>,
}

impl Default for Connection {
    fn default() -> Self {
        let goals = GoalSet::new(builtins::table_goals()).expect("table goals are distinct");
        Connection::new(SessionConfig::default(), goals).expect("default session")
    }
}

impl Connection {
    pub fn new(config: SessionConfig, goals: GoalSet) -> Result<Self, CoreError> {
        Ok(Connection {
            session: Session::new(config, goals)?,
            agent: None,
            gestures: VecDeque::with_capacity(GESTURE_HISTORY),
            gesture: Gesture::None,
            scenario: None,
            playback: VecDeque::new(),
        })
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn robot(&self) -> Option<&RobotState> {
        self.agent.as_ref().map(|a| &a.robot)
    }

    pub fn is_playing(&self) -> bool {
        !self.playback.is_empty()
    }

    pub fn playback_rate(&self) -> Option<f64> {
        self.scenario.as_ref().map(|s| s.rate)
    }

    pub fn snapshot(&self) -> ServerMessage {
        ServerMessage::Snapshot(SnapshotBody {
            goals: self.session.goals().as_slice().to_vec(),
            config: self.session.config().clone(),
            agent: self.agent.as_ref().map(|a| a.config.clone()),
            robot: self.robot().cloned(),
            scenario: self.scenario.as_ref().map(|s| s.name.clone()),
        })
    }

    /// Handles one raw text frame.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match ClientMessage::decode(text) {
            Ok(msg) => self.handle(msg),
            Err(detail) => vec![ServerMessage::error(400, detail)],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::Observation { t, head, hand, joints } => {
                self.observe(Observation { t, head, hand, joints })
            }
            ClientMessage::GoalEdit { op, goal, id } => self.edit_goal(op, goal, id),
            ClientMessage::ParamUpdate { alpha, beta, gamma, delta, m } => {
                let current = self.session.config().params;
                let params = HmmParams {
                    alpha: alpha.unwrap_or(current.alpha),
                    beta: beta.unwrap_or(current.beta),
                    gamma: gamma.unwrap_or(current.gamma),
                    delta: delta.unwrap_or(current.delta),
                    m: m.unwrap_or(current.m),
                };
                match self.session.set_params(params) {
                    Ok(()) => vec![self.snapshot()],
                    Err(e) => vec![core_error(e)],
                }
            }
            ClientMessage::ModeToggle { agent } => {
                match agent {
                    None => self.agent = None,
                    Some(config) => {
                        if let Err(e) = config.validate() {
                            return vec![core_error(e)];
                        }
                        let robot = self.robot().map(|r| r.position).unwrap_or(ROBOT_HOME);
                        self.agent = Some(Agent {
                            rng: ChaCha8Rng::seed_from_u64(config.seed),
                            robot: RobotState::at(robot, config.speed),
                            config,
                        });
                    }
                }
                vec![self.snapshot()]
            }
            ClientMessage::GesturePose { skeleton, fixture } => {
                let skeleton = match (skeleton, fixture) {
                    (Some(s), None) => s,
                    (None, Some(name)) => fixtures::named(name),
                    _ => return vec![ServerMessage::error(400, "gesture_pose needs exactly one of `skeleton` or `fixture`")],
                };
                match self.push_gesture(skeleton) {
                    Ok(gesture) => vec![ServerMessage::GestureLabel { gesture }],
                    Err(e) => vec![core_error(e)],
                }
            }
            ClientMessage::ScenarioControl { action, name } => self.control(action, name),
        }
    }

    fn push_gesture(&mut self, skeleton: HandSkeleton) -> Result<Gesture, CoreError> {
        if self.gestures.len() == GESTURE_HISTORY {
            self.gestures.pop_front();
        }
        self.gestures.push_back(skeleton);
        let history: Vec<HandSkeleton> = self.gestures.iter().cloned().collect();
        self.gesture = classify_gesture(&history)?;
        Ok(self.gesture)
    }

    fn observe(&mut self, obs: Observation) -> Vec<ServerMessage> {
        let previous_t = self.session.last_timestamp();
        let estimate = match self.session.observe(&obs) {
            Ok(e) => e,
            Err(e) => return vec![core_error(e)],
        };
        if let Some(joints) = obs.joints {
            // pose was validated on construction; classification cannot fail on a full history
            let _ = self.push_gesture(joints);
        }
        let mut out = vec![ServerMessage::Estimate { estimate: estimate.clone() }];
        if let Some(agent) = self.agent.as_mut() {
            let dt = previous_t.map(|p| estimate.t - p).filter(|dt| *dt > 0.0);
            if let Some(dt) = dt {
                match agent_step(&agent.robot, &estimate, self.session.goals(), self.gesture, dt, &agent.config, &mut agent.rng) {
                    Ok((robot, events)) => {
                        agent.robot = robot.clone();
                        out.push(ServerMessage::RobotUpdate { robot, events });
                    }
                    Err(e) => out.push(core_error(e)),
                }
            }
        }
        out
    }

    fn edit_goal(&mut self, op: EditOp, goal: Option<Goal>, id: Option<GoalId>) -> Vec<ServerMessage> {
        let result = match (op, goal, id) {
            (EditOp::Add, Some(goal), None) => self.session.add_goal(goal),
            (EditOp::Remove, None, Some(id)) => self.session.remove_goal(&id).map(|_| {
                if let Some(agent) = self.agent.as_mut() {
                    if agent.robot.target.as_ref() == Some(&id) {
                        agent.robot.target = None;
                    }
                }
            }),
            (EditOp::Add, _, _) => return vec![ServerMessage::error(400, "goal_edit add needs `goal` only")],
            (EditOp::Remove, _, _) => return vec![ServerMessage::error(400, "goal_edit remove needs `id` only")],
        };
        match result {
            Ok(()) => vec![self.snapshot()],
            Err(e) => vec![core_error(e)],
        }
    }

    fn control(&mut self, action: ScenarioAction, name: Option<String>) -> Vec<ServerMessage> {
        match action {
            ScenarioAction::Load => {
                let Some(name) = name else {
                    return vec![ServerMessage::error(400, "scenario_control load needs `name`")];
                };
                let Some(scenario) = builtins::by_name(&name) else {
                    return vec![ServerMessage::error(400, format!("unknown scenario `{name}`"))];
                };
                let goals = match scenario.goal_set() {
                    Ok(g) => g,
                    Err(e) => return vec![ServerMessage::error(400, e.to_string())],
                };
                match Session::new(self.session.config().clone(), goals) {
                    Ok(session) => {
                        self.session = session;
                        self.playback.clear();
                        self.gestures.clear();
                        self.gesture = Gesture::None;
                        if let Some(agent) = self.agent.as_mut() {
                            agent.robot = RobotState::at(ROBOT_HOME, agent.config.speed);
                            agent.rng = ChaCha8Rng::seed_from_u64(agent.config.seed);
                        }
                        self.scenario = Some(scenario);
                        vec![self.snapshot()]
                    }
                    Err(e) => vec![core_error(e)],
                }
            }
            ScenarioAction::Start => {
                let Some(scenario) = &self.scenario else {
                    return vec![ServerMessage::error(409, "no scenario loaded")];
                };
                let stream = match scenario.synthesize() {
                    Ok(s) => s,
                    Err(e) => return vec![ServerMessage::error(400, e.to_string())],
                };
                // continue the session clock after the last observation
                let offset = self.session.last_timestamp().unwrap_or(0.0);
                self.playback = stream.into_iter().map(|o| Observation { t: o.t + offset, ..o }).collect();
                vec![self.snapshot()]
            }
            ScenarioAction::Stop => {
                self.playback.clear();
                vec![self.snapshot()]
            }
        }
    }

    /// Feeds the next queued scenario observation, if any.
    pub fn step_playback(&mut self) -> Option<Vec<ServerMessage>> {
        let obs = self.playback.pop_front()?;
        Some(self.observe(obs))
    }
}
