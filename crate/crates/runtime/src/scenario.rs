//! Declarative scenarios: goal layout plus a script of hand/gaze segments,
//! compiled into a deterministic observation stream.

use std::path::Path;

use intent_core::geometry::{Goal, GoalId, GoalSet, HeadPose, Vec3};
use intent_core::Observation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    /// Hand position std-dev per axis, meters.
    #[serde(default)]
    pub hand: f64,
    /// Gaze yaw and pitch std-dev, radians.
    #[serde(default)]
    pub gaze: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    #[default]
    MinJerk,
}

impl Interpolation {
    fn ease(self, p: f64) -> f64 {
        match self {
            Interpolation::Linear => p,
            Interpolation::MinJerk => p * p * p * (10.0 - 15.0 * p + 6.0 * p * p),
        }
    }
}

/// Where the gaze points at the end of a segment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GazeCommand {
    /// Keep the current direction.
    #[default]
    Hold,
    /// Look at a goal by id.
    Goal(GoalId),
    /// Look at a world point.
    Point(Vec3),
    Direction(Vec3),
    /// Rotate about the vertical axis by this many degrees (any magnitude).
    YawSweep(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptSegment {
    pub duration: f64,
    pub hand_to: Vec3,
    /// Control point bending the hand path into a quadratic Bezier curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<Vec3>,
    #[serde(default)]
    pub gaze: GazeCommand,
    #[serde(default)]
    pub interpolation: Interpolation,
    /// Goal the person is heading for during this segment, if any. Used by
    /// the latency metrics, never by the estimator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<GoalId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Samples per second.
    pub rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub noise: Noise,
    pub head: Vec3,
    pub start_hand: Vec3,
    pub start_gaze: GazeCommand,
    pub goals: Vec<Goal>,
    pub segments: Vec<ScriptSegment>,
}

/// Time span covered by one segment, in stream time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSpan {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    /// Sample indices `first..=last` (1-based sample numbering) belonging to it.
    pub first_sample: usize,
    pub last_sample: usize,
}

/// A contiguous run of segments sharing one `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub goal: GoalId,
    pub start: f64,
    pub end: f64,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Scenario::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes to TOML")
    }

    pub fn goal_set(&self) -> Result<GoalSet, ScenarioError> {
        GoalSet::new(self.goals.clone()).map_err(|e| invalid(e.to_string()))
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn sample_count(&self) -> usize {
        (self.duration() * self.rate).round() as usize
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(invalid("rate must be positive"));
        }
        if !(self.noise.hand >= 0.0 && self.noise.gaze >= 0.0) {
            return Err(invalid("noise levels must be non-negative"));
        }
        if self.segments.is_empty() {
            return Err(invalid("at least one segment is required"));
        }
        let goals = self.goal_set()?;
        if goals.is_empty() {
            return Err(invalid("at least one goal is required"));
        }
        if !self.head.is_finite() || !self.start_hand.is_finite() {
            return Err(invalid("head and start hand must be finite"));
        }
        let check_gaze = |g: &GazeCommand| -> Result<(), ScenarioError> {
            match g {
                GazeCommand::Goal(id) if goals.index_of(id).is_none() => {
                    Err(invalid(format!("gaze refers to unknown goal `{id}`")))
                }
                GazeCommand::Point(p) if p.distance(self.head).partial_cmp(&1e-9) != Some(std::cmp::Ordering::Greater) => {
                    Err(invalid("gaze point coincides with the head"))
                }
                GazeCommand::Direction(d) if d.normalized().is_none() => Err(invalid("gaze direction is zero")),
                GazeCommand::YawSweep(deg) if !deg.is_finite() => Err(invalid("yaw sweep must be finite")),
                _ => Ok(()),
            }
        };
        if matches!(self.start_gaze, GazeCommand::Hold | GazeCommand::YawSweep(_)) {
            return Err(invalid("start_gaze must name a goal, point or direction"));
        }
        check_gaze(&self.start_gaze)?;
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration > 0.0) || !seg.duration.is_finite() {
                return Err(invalid(format!("segment {i}: duration must be positive")));
            }
            if !seg.hand_to.is_finite() || seg.via.is_some_and(|v| !v.is_finite()) {
                return Err(invalid(format!("segment {i}: hand_to and via must be finite")));
            }
            check_gaze(&seg.gaze)?;
            if let Some(target) = &seg.target {
                if goals.index_of(target).is_none() {
                    return Err(invalid(format!("segment {i}: unknown target `{target}`")));
                }
            }
        }
        if self.sample_count() == 0 {
            return Err(invalid("scenario is shorter than one sample"));
        }
        Ok(())
    }

    pub fn spans(&self) -> Vec<SegmentSpan> {
        let mut spans = Vec::with_capacity(self.segments.len());
        let mut elapsed = 0.0;
        let mut done = 0usize;
        for (index, seg) in self.segments.iter().enumerate() {
            let end = elapsed + seg.duration;
            let last = (end * self.rate).round() as usize;
            spans.push(SegmentSpan { index, start: elapsed, end, first_sample: done + 1, last_sample: last });
            done = last.max(done);
            elapsed = end;
        }
        spans
    }

    /// Consecutive segments with the same target, merged.
    pub fn visits(&self) -> Vec<Visit> {
        let mut visits: Vec<Visit> = Vec::new();
        let mut previous: Option<&GoalId> = None;
        for (span, seg) in self.spans().iter().zip(&self.segments) {
            match (&seg.target, previous) {
                (Some(goal), Some(prev)) if goal == prev => visits.last_mut().expect("open visit").end = span.end,
                (Some(goal), _) => visits.push(Visit { goal: goal.clone(), start: span.start, end: span.end }),
                (None, _) => {}
            }
            previous = seg.target.as_ref();
        }
        visits
    }

    /// Span of the first segment carrying `label`.
    pub fn labelled_span(&self, label: &str) -> Option<SegmentSpan> {
        self.spans().into_iter().find(|s| self.segments[s.index].label.as_deref() == Some(label))
    }

    fn gaze_target(&self, command: &GazeCommand, current: Vec3) -> Vec3 {
        match command {
            GazeCommand::Hold | GazeCommand::YawSweep(_) => current,
            GazeCommand::Goal(id) => {
                let goal = self.goals.iter().find(|g| &g.id == id).expect("validated goal reference");
                (goal.position - self.head).normalized().unwrap_or(current)
            }
            GazeCommand::Point(p) => (*p - self.head).normalized().unwrap_or(current),
            GazeCommand::Direction(d) => d.normalized().unwrap_or(current),
        }
    }

    /// Compiles the script into observations at `t = k / rate`, `k = 1..=N`.
    /// The final sample of every segment lands exactly on its end pose.
    pub fn synthesize(&self) -> Result<Vec<Observation>, ScenarioError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let hand_noise = Normal::new(0.0, self.noise.hand).map_err(|e| invalid(e.to_string()))?;
        let gaze_noise = Normal::new(0.0, self.noise.gaze).map_err(|e| invalid(e.to_string()))?;

        let mut hand = self.start_hand;
        let mut gaze = self.gaze_target(&self.start_gaze, Vec3::X);
        let mut out = Vec::with_capacity(self.sample_count());
        for span in self.spans() {
            let seg = &self.segments[span.index];
            let gaze_end = self.gaze_target(&seg.gaze, gaze);
            let count = span.last_sample + 1 - span.first_sample;
            for k in span.first_sample..=span.last_sample {
                let progress = (k + 1 - span.first_sample) as f64 / count as f64;
                let eased = seg.interpolation.ease(progress);
                let mut h = match seg.via {
                    None => hand.lerp(seg.hand_to, eased),
                    Some(c) => hand.lerp(c, eased).lerp(c.lerp(seg.hand_to, eased), eased),
                };
                let mut dir = match seg.gaze {
                    GazeCommand::YawSweep(deg) => gaze.rotate_z(deg.to_radians() * eased),
                    _ => slerp(gaze, gaze_end, eased),
                };
                if self.noise.hand > 0.0 {
                    h += Vec3::new(hand_noise.sample(&mut rng), hand_noise.sample(&mut rng), hand_noise.sample(&mut rng));
                }
                if self.noise.gaze > 0.0 {
                    dir = perturb(dir, gaze_noise.sample(&mut rng), gaze_noise.sample(&mut rng));
                }
                let head = HeadPose::looking_along(self.head, dir).map_err(|e| invalid(e.to_string()))?;
                out.push(Observation::new(k as f64 / self.rate, head, h));
            }
            hand = seg.hand_to;
            gaze = match seg.gaze {
                GazeCommand::YawSweep(deg) => gaze.rotate_z(deg.to_radians()),
                _ => gaze_end,
            };
        }
        Ok(out)
    }
}

fn rotate_about(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Spherical interpolation between unit vectors.
fn slerp(from: Vec3, to: Vec3, t: f64) -> Vec3 {
    let angle = from.dot(to).clamp(-1.0, 1.0).acos();
    if angle < 1e-12 {
        return to;
    }
    let axis = from.cross(to).normalized().unwrap_or_else(|| {
        // antiparallel: turn about the vertical if possible
        Vec3::Z.cross(from).cross(from).normalized().map(|_| Vec3::Z).unwrap_or_else(|| from.any_perpendicular())
    });
    rotate_about(from, axis, angle * t)
}

/// Adds yaw and pitch offsets to a direction.
fn perturb(dir: Vec3, yaw: f64, pitch: f64) -> Vec3 {
    let horizontal = (dir.x * dir.x + dir.y * dir.y).sqrt();
    let heading = dir.y.atan2(dir.x) + yaw;
    let elevation = dir.z.atan2(horizontal) + pitch;
    Vec3::new(elevation.cos() * heading.cos(), elevation.cos() * heading.sin(), elevation.sin())
}

/// One line of an exported observation stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub t: f64,
    pub head_pos: Vec3,
    pub head_dir: Vec3,
    pub hand_pos: Vec3,
}

impl From<&Observation> for ObservationRecord {
    fn from(o: &Observation) -> Self {
        ObservationRecord { t: o.t, head_pos: o.head.position, head_dir: o.head.forward, hand_pos: o.hand }
    }
}

impl ObservationRecord {
    pub fn to_observation(&self) -> Result<Observation, intent_core::Error> {
        Ok(Observation::new(self.t, HeadPose::new(self.head_pos, self.head_dir)?, self.hand_pos))
    }
}

pub fn write_observations(observations: &[Observation], mut out: impl std::io::Write) -> std::io::Result<()> {
    for o in observations {
        serde_json::to_writer(&mut out, &ObservationRecord::from(o))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_observations(text: &str) -> Result<Vec<Observation>, ScenarioError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let record: ObservationRecord =
                serde_json::from_str(line).map_err(|e| invalid(format!("observation line {}: {e}", i + 1)))?;
            record.to_observation().map_err(|e| invalid(format!("observation line {}: {e}", i + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_segment(interpolation: Interpolation, noise: Noise) -> Scenario {
        Scenario {
            schema: 1,
            name: "line".into(),
            description: String::new(),
            rate: 30.0,
            seed: 5,
            noise,
            head: Vec3::new(0.0, 0.0, 1.6),
            start_hand: Vec3::new(0.2, 0.0, 1.0),
            start_gaze: GazeCommand::Goal("a".into()),
            goals: vec![Goal::new("a", "A", Vec3::new(1.5, 0.0, 0.8))],
            segments: vec![ScriptSegment {
                duration: 1.0,
                hand_to: Vec3::new(1.2, 0.0, 0.8),
                via: None,
                gaze: GazeCommand::Hold,
                interpolation,
                target: Some("a".into()),
                label: None,
            }],
        }
    }

    #[test]
    fn linear_segment_sampling() {
        let sc = one_segment(Interpolation::Linear, Noise::default());
        let obs = sc.synthesize().unwrap();
        assert_eq!(obs.len(), 30);
        assert_eq!(obs.last().unwrap().hand, Vec3::new(1.2, 0.0, 0.8));
        assert!((obs.last().unwrap().t - 1.0).abs() < 1e-12);
        // first emitted sample is one interval past the start pose
        let expected = Vec3::new(0.2, 0.0, 1.0).lerp(Vec3::new(1.2, 0.0, 0.8), 1.0 / 30.0);
        assert!(obs[0].hand.distance(expected) < 1e-12);
        for w in obs.windows(2) {
            assert!((w[1].t - w[0].t - 1.0 / 30.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let noisy = Noise { hand: 0.01, gaze: 0.02 };
        let a = one_segment(Interpolation::MinJerk, noisy).synthesize().unwrap();
        let b = one_segment(Interpolation::MinJerk, noisy).synthesize().unwrap();
        assert_eq!(a, b);
        let mut other = one_segment(Interpolation::MinJerk, noisy);
        other.seed = 6;
        assert_ne!(a, other.synthesize().unwrap());
    }

    #[test]
    fn yaw_sweep_turns_fully_around() {
        let mut sc = one_segment(Interpolation::Linear, Noise::default());
        sc.start_gaze = GazeCommand::Direction(Vec3::X);
        sc.segments[0].gaze = GazeCommand::YawSweep(360.0);
        let obs = sc.synthesize().unwrap();
        assert!(obs[14].head.forward.x < -0.99);
        assert!(obs.last().unwrap().head.forward.distance(Vec3::X) < 1e-9);
    }

    #[test]
    fn slerp_hits_endpoints() {
        let a = Vec3::X;
        let b = Vec3::new(0.0, 0.6, 0.8);
        assert!(slerp(a, b, 0.0).distance(a) < 1e-12);
        assert!(slerp(a, b, 1.0).distance(b) < 1e-12);
        let mid = slerp(a, -a, 0.5);
        assert!((mid.norm() - 1.0).abs() < 1e-12 && mid.dot(a).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let mut sc = one_segment(Interpolation::Linear, Noise::default());
        sc.schema = 2;
        assert!(sc.validate().is_err());
        let mut sc = one_segment(Interpolation::Linear, Noise::default());
        sc.segments[0].duration = 0.0;
        assert!(sc.validate().is_err());
        let mut sc = one_segment(Interpolation::Linear, Noise::default());
        sc.segments[0].gaze = GazeCommand::Goal("nope".into());
        assert!(sc.validate().is_err());
        let mut sc = one_segment(Interpolation::Linear, Noise::default());
        sc.segments.clear();
        assert!(sc.validate().is_err());
        assert!(Scenario::from_toml("schema = 1\nname = 3").is_err());
    }

    #[test]
    fn observation_lines_round_trip() {
        let obs = one_segment(Interpolation::MinJerk, Noise { hand: 0.003, gaze: 0.01 }).synthesize().unwrap();
        let mut buf = Vec::new();
        write_observations(&obs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().contains("\"head_dir\""));
        assert_eq!(read_observations(&text).unwrap(), obs);
    }
}
