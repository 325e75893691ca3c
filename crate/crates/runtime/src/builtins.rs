//! Built-in scenarios: three objects on a table arc in front of a seated
//! person, visited in different orders.

use intent_core::geometry::{Goal, GoalId, Vec3};

use crate::scenario::{GazeCommand, Interpolation, Noise, Scenario, ScriptSegment, SCHEMA_VERSION};

pub const NAMES: [&str; 5] = ["fig7_left", "fig7_middle", "fig7_right", "sweep_base", "conflict_loop"];

const ARC_RADIUS: f64 = 1.5;
const TABLE_HEIGHT: f64 = 0.8;
/// Seated eye height.
const HEAD: Vec3 = Vec3::new(0.0, 0.0, 1.2);
const REST: Vec3 = Vec3::new(0.25, -0.2, 0.9);
/// Pre-grasp point distance from the body axis; reaches finish radially.
const PREGRASP_RADIUS: f64 = 0.9;
/// Grasp point stops this far short of the object center.
const GRASP_OFFSET: f64 = 0.05;
const RATE: f64 = 30.0;
/// Vertical lift before leaving a held object.
const LIFT: f64 = 0.12;

fn arc_goal(id: &str, label: &str, degrees: f64) -> Goal {
    let a = degrees.to_radians();
    Goal::new(id, label, Vec3::new(ARC_RADIUS * a.cos(), ARC_RADIUS * a.sin(), TABLE_HEIGHT))
}

pub fn table_goals() -> Vec<Goal> {
    vec![arc_goal("cylinder", "green cylinder", 45.0), arc_goal("cube", "red cube", 0.0), arc_goal("sphere", "blue sphere", -45.0)]
}

fn radial(goal: &str) -> (Goal, Vec3) {
    let g = table_goals().into_iter().find(|g| g.id.as_str() == goal).expect("table goal");
    let r = Vec3::new(g.position.x, g.position.y, 0.0).normalized().expect("off-axis goal");
    (g, r)
}

fn grasp_point(goal: &str) -> Vec3 {
    let (g, r) = radial(goal);
    g.position - r * GRASP_OFFSET
}

fn pregrasp_point(goal: &str) -> Vec3 {
    let (_, r) = radial(goal);
    r * PREGRASP_RADIUS + Vec3::new(0.0, 0.0, REST.z)
}

struct Script {
    hand: Vec3,
    holding: bool,
    segments: Vec<ScriptSegment>,
}

impl Script {
    fn new() -> Self {
        Script { hand: REST, holding: false, segments: Vec::new() }
    }

    fn push(&mut self, duration: f64, hand_to: Vec3, gaze: GazeCommand, interpolation: Interpolation, target: Option<&str>, label: &str) {
        self.push_via(duration, hand_to, None, gaze, interpolation, target, label);
    }

    #[allow(clippy::too_many_arguments)]
    fn push_via(
        &mut self,
        duration: f64,
        hand_to: Vec3,
        via: Option<Vec3>,
        gaze: GazeCommand,
        interpolation: Interpolation,
        target: Option<&str>,
        label: &str,
    ) {
        self.hand = hand_to;
        self.segments.push(ScriptSegment {
            duration,
            hand_to,
            via,
            gaze,
            interpolation,
            target: target.map(GoalId::from),
            label: Some(label.to_string()),
        });
    }

    /// Glance at the object, lift whatever is held, reach along a curve that
    /// finishes radially, hold.
    fn visit(&mut self, goal: &str) {
        let here = self.hand;
        self.push(0.3, here, GazeCommand::Goal(goal.into()), Interpolation::MinJerk, Some(goal), "look");
        if self.holding {
            self.push(0.4, here + Vec3::new(0.0, 0.0, LIFT), GazeCommand::Hold, Interpolation::MinJerk, Some(goal), "lift");
        }
        self.holding = true;
        let via = Some(pregrasp_point(goal));
        self.push_via(1.4, grasp_point(goal), via, GazeCommand::Hold, Interpolation::MinJerk, Some(goal), "reach");
        self.push(0.6, grasp_point(goal), GazeCommand::Hold, Interpolation::Linear, Some(goal), "dwell");
    }

    fn idle(&mut self, duration: f64) {
        let here = self.hand;
        self.push(duration, here, GazeCommand::Hold, Interpolation::Linear, None, "idle");
    }
}

fn scenario(name: &str, description: &str, seed: u64, noise: Noise, script: Script) -> Scenario {
    Scenario {
        schema: SCHEMA_VERSION,
        name: name.into(),
        description: description.into(),
        rate: RATE,
        seed,
        noise,
        head: HEAD,
        start_hand: REST,
        start_gaze: GazeCommand::Goal("cube".into()),
        goals: table_goals(),
        segments: script.segments,
    }
}

const QUIET: Noise = Noise { hand: 0.0002, gaze: 0.005 };

pub fn fig7_left() -> Scenario {
    let mut s = Script::new();
    s.idle(0.5);
    for goal in ["cylinder", "cube", "sphere"] {
        s.visit(goal);
    }
    scenario("fig7_left", "Left-to-right pass: cylinder, cube, sphere.", 11, QUIET, s)
}

pub fn fig7_middle() -> Scenario {
    let mut s = Script::new();
    s.idle(0.5);
    for goal in ["cube", "cylinder", "cube", "sphere"] {
        s.visit(goal);
    }
    scenario("fig7_middle", "Start at the cube, visit cylinder, return to the cube, finish at the sphere.", 12, QUIET, s)
}

pub fn fig7_right() -> Scenario {
    let mut s = Script::new();
    s.idle(0.5);
    for goal in ["sphere", "cube", "cylinder"] {
        s.visit(goal);
    }
    // full turn: face away from the table, wander, come back round to the sphere
    s.push(1.5, Vec3::new(-0.35, 0.35, 1.0), GazeCommand::YawSweep(135.0), Interpolation::MinJerk, None, "rotate_away");
    s.push(2.0, Vec3::new(-0.45, -0.3, 1.1), GazeCommand::Hold, Interpolation::Linear, None, "away");
    s.push(1.5, Vec3::new(0.35, -0.35, 1.0), GazeCommand::YawSweep(135.0), Interpolation::MinJerk, None, "rotate_back");
    s.push(0.4, Vec3::new(0.35, -0.35, 1.0), GazeCommand::Goal("sphere".into()), Interpolation::MinJerk, Some("sphere"), "look");
    s.push(1.5, grasp_point("sphere"), GazeCommand::Hold, Interpolation::MinJerk, Some("sphere"), "reach");
    s.push(1.0, grasp_point("sphere"), GazeCommand::Hold, Interpolation::Linear, Some("sphere"), "dwell");
    scenario("fig7_right", "Right-to-left pass, then a full turn away and back to the sphere.", 13, QUIET, s)
}

/// Noisy left-to-right pass used for parameter sweeps.
pub fn sweep_base() -> Scenario {
    let mut s = Script::new();
    s.idle(0.5);
    for goal in ["cylinder", "cube", "sphere"] {
        s.visit(goal);
    }
    scenario(
        "sweep_base",
        "Noisy multi-goal pass with hand tremor and gaze jitter.",
        21,
        Noise { hand: 0.003, gaze: 0.1 },
        s,
    )
}

/// Long shared-workspace session for the robot loop.
pub fn conflict_loop() -> Scenario {
    let mut s = Script::new();
    s.idle(0.5);
    let order = ["cube", "sphere", "cylinder", "sphere", "cube", "cylinder", "cube"];
    for goal in order.iter().cycle().take(14) {
        s.visit(goal);
    }
    scenario("conflict_loop", "Repeated visits in a shared workspace.", 31, Noise { hand: 0.0005, gaze: 0.01 }, s)
}

pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "fig7_left" => Some(fig7_left()),
        "fig7_middle" => Some(fig7_middle()),
        "fig7_right" => Some(fig7_right()),
        "sweep_base" => Some(sweep_base()),
        "conflict_loop" => Some(conflict_loop()),
        _ => None,
    }
}
