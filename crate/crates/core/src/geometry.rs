//! Gaze validation, candidate sampling around the previous hand position, and
//! the motion validation vector built from them.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Tolerance on `‖forward‖ = 1` for head poses.
pub const UNIT_TOLERANCE: f64 = 1e-9;
/// Below this head-to-goal distance the gaze direction to a goal is undefined.
pub const GOAL_AT_HEAD: f64 = 1e-6;
/// Columns of `D` narrower than this are treated as degenerate.
pub const DEGENERATE_COLUMN: f64 = 1e-9;
/// Default number of candidate points sampled around the previous hand position.
pub const DEFAULT_SAMPLE_COUNT: usize = 32;

/// Per-goal gaze support `s`, each component in `[0, 1]`.
pub type GazeVector = Vec<f64>;
/// Per-goal motion validation `v`, each component in `[0, 1]`.
pub type ValidationVector = Vec<f64>;

/// A point or direction in the world frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(from = "[f64; 3]", into = "[f64; 3]")
)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 1e-12 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, other: Vec3, t: f64) -> Vec3 {
        self + (other - self) * t
    }

    /// Rotates about the world `z` axis by `angle` radians.
    pub fn rotate_z(self, angle: f64) -> Vec3 {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }

    /// Any unit vector perpendicular to `self`, chosen from the world axis
    /// least aligned with it.
    pub fn any_perpendicular(self) -> Vec3 {
        let a = Vec3::new(self.x.abs(), self.y.abs(), self.z.abs());
        let axis = if a.x <= a.y && a.x <= a.z {
            Vec3::X
        } else if a.y <= a.z {
            Vec3::Y
        } else {
            Vec3::Z
        };
        self.cross(axis).normalized().unwrap_or(Vec3::X)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Vec3::new(x, y, z)
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Head-mounted display pose: position `h` and unit forward direction `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeadPose {
    pub position: Vec3,
    pub forward: Vec3,
}

impl HeadPose {
    /// Checked constructor; `forward` must already be unit length.
    pub fn new(position: Vec3, forward: Vec3) -> Result<Self> {
        let pose = HeadPose { position, forward };
        pose.validate()?;
        Ok(pose)
    }

    /// Builds a pose looking along `direction`, normalizing it.
    pub fn looking_along(position: Vec3, direction: Vec3) -> Result<Self> {
        let forward = direction
            .normalized()
            .ok_or_else(|| Error::invalid("gaze direction has zero length"))?;
        HeadPose::new(position, forward)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || !self.forward.is_finite() {
            return Err(Error::invalid("head pose has non-finite components"));
        }
        let n = self.forward.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "head forward vector must be unit length, got norm {n}"
            )));
        }
        Ok(())
    }
}

/// Opaque, stable goal identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct GoalId(pub String);

impl GoalId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for GoalId {
    fn from(s: &str) -> Self {
        GoalId(s.to_owned())
    }
}

impl From<String> for GoalId {
    fn from(s: String) -> Self {
        GoalId(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Goal {
    pub id: GoalId,
    pub label: String,
    pub position: Vec3,
}

impl Goal {
    pub fn new(id: impl Into<GoalId>, label: impl Into<String>, position: Vec3) -> Self {
        Goal { id: id.into(), label: label.into(), position }
    }
}

/// Ordered goals; the order is the canonical state order `G_1..G_g`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(try_from = "Vec<Goal>", into = "Vec<Goal>"))]
pub struct GoalSet {
    goals: Vec<Goal>,
}

impl GoalSet {
    pub fn new(goals: Vec<Goal>) -> Result<Self> {
        let mut set = GoalSet { goals: Vec::with_capacity(goals.len()) };
        for goal in goals {
            set.push(goal)?;
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Goal> {
        self.goals.iter()
    }

    pub fn as_slice(&self) -> &[Goal] {
        &self.goals
    }

    pub fn get(&self, index: usize) -> Option<&Goal> {
        self.goals.get(index)
    }

    pub fn index_of(&self, id: &GoalId) -> Option<usize> {
        self.goals.iter().position(|g| &g.id == id)
    }

    pub fn by_id(&self, id: &GoalId) -> Option<&Goal> {
        self.goals.iter().find(|g| &g.id == id)
    }

    /// Appends a goal; rejects duplicate ids and non-finite positions.
    pub fn push(&mut self, goal: Goal) -> Result<()> {
        if !goal.position.is_finite() {
            return Err(Error::InvalidInput(format!("goal `{}` has a non-finite position", goal.id)));
        }
        if self.index_of(&goal.id).is_some() {
            return Err(Error::DuplicateGoal(goal.id));
        }
        self.goals.push(goal);
        Ok(())
    }

    /// Removes a goal, returning it together with its former index.
    pub fn remove(&mut self, id: &GoalId) -> Result<(usize, Goal)> {
        let idx = self.index_of(id).ok_or_else(|| Error::UnknownGoal(id.clone()))?;
        Ok((idx, self.goals.remove(idx)))
    }
}

impl TryFrom<Vec<Goal>> for GoalSet {
    type Error = Error;
    fn try_from(goals: Vec<Goal>) -> Result<Self> {
        GoalSet::new(goals)
    }
}

impl From<GoalSet> for Vec<Goal> {
    fn from(set: GoalSet) -> Self {
        set.goals
    }
}

impl<'a> IntoIterator for &'a GoalSet {
    type Item = &'a Goal;
    type IntoIter = core::slice::Iter<'a, Goal>;
    fn into_iter(self) -> Self::IntoIter {
        self.goals.iter()
    }
}

/// How candidate points around the previous hand position are laid out.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case", tag = "kind"))]
pub enum PatternKind {
    /// Golden-angle spiral covering the whole sphere.
    FibonacciSphere,
    /// Evenly spaced points on a circle in the plane with the given world normal.
    PlanarCircle { normal: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplePattern {
    pub kind: PatternKind,
    pub count: usize,
}

impl SamplePattern {
    pub const MIN_COUNT: usize = 4;

    pub fn sphere(count: usize) -> Self {
        SamplePattern { kind: PatternKind::FibonacciSphere, count }
    }

    pub fn circle(normal: Vec3, count: usize) -> Self {
        SamplePattern { kind: PatternKind::PlanarCircle { normal }, count }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < Self::MIN_COUNT {
            return Err(Error::InvalidInput(format!(
                "sample pattern needs at least {} points, got {}",
                Self::MIN_COUNT,
                self.count
            )));
        }
        if let PatternKind::PlanarCircle { normal } = self.kind {
            if normal.normalized().is_none() || !normal.is_finite() {
                return Err(Error::invalid("planar circle normal must be a finite non-zero vector"));
            }
        }
        Ok(())
    }
}

impl Default for SamplePattern {
    fn default() -> Self {
        SamplePattern::sphere(DEFAULT_SAMPLE_COUNT)
    }
}

/// Orthonormal frame in which the sphere pattern is laid out. The spiral's
/// polar axis maps to `polar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleFrame {
    pub polar: Vec3,
    pub u: Vec3,
    pub w: Vec3,
}

impl SampleFrame {
    pub const WORLD: SampleFrame = SampleFrame { polar: Vec3::Y, u: Vec3::X, w: Vec3::Z };

    /// Frame whose polar axis is the motion direction and whose second axis
    /// is the gaze direction with its motion component removed. The pattern
    /// then moves rigidly with the scene.
    pub fn from_motion(motion: Vec3, gaze: Vec3) -> SampleFrame {
        let Some(polar) = motion.normalized() else {
            return SampleFrame::WORLD;
        };
        let u = (gaze - polar * gaze.dot(polar))
            .normalized()
            .filter(|_| gaze.normalized().is_some_and(|g| g.cross(polar).norm() > 1e-6))
            .unwrap_or_else(|| polar.any_perpendicular());
        let w = polar.cross(u);
        SampleFrame { polar, u, w }
    }
}

/// Gaze validation `s_i = max(0, g · (o_i − h)/‖o_i − h‖)`.
pub fn gaze_validation(head: &HeadPose, goals: &GoalSet) -> Result<GazeVector> {
    head.validate()?;
    Ok(goals
        .iter()
        .map(|goal| {
            let to_goal = goal.position - head.position;
            let dist = to_goal.norm();
            if dist < GOAL_AT_HEAD {
                0.0
            } else {
                head.forward.dot(to_goal * (1.0 / dist)).clamp(0.0, 1.0)
            }
        })
        .collect())
}

/// Samples `pattern.count` points at distance `radius` around `center`.
///
/// `min_radius` is the motion threshold; smaller radii are stationary samples
/// and must be filtered before calling this.
pub fn sample_candidate_points(
    center: Vec3,
    radius: f64,
    pattern: &SamplePattern,
    frame: &SampleFrame,
    min_radius: f64,
) -> Result<Vec<Vec3>> {
    pattern.validate()?;
    if !radius.is_finite() || !(radius >= min_radius) || radius <= 0.0 {
        return Err(Error::Precondition(format!(
            "sample radius {radius} is below the motion threshold {min_radius}"
        )));
    }
    let n = pattern.count;
    let points = match pattern.kind {
        PatternKind::FibonacciSphere => {
            let golden = core::f64::consts::PI * (3.0 - libm::sqrt(5.0));
            (0..n)
                .map(|i| {
                    let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let ring = libm::sqrt((1.0 - y * y).max(0.0));
                    let theta = golden * i as f64;
                    let local = frame.u * (ring * libm::cos(theta))
                        + frame.polar * y
                        + frame.w * (ring * libm::sin(theta));
                    center + local * radius
                })
                .collect()
        }
        PatternKind::PlanarCircle { normal } => {
            let normal = normal.normalized().expect("validated");
            let u = normal.any_perpendicular();
            let w = normal.cross(u);
            (0..n)
                .map(|i| {
                    let phi = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
                    center + (u * libm::cos(phi) + w * libm::sin(phi)) * radius
                })
                .collect()
        }
    };
    Ok(points)
}

/// Distances from sampled candidate points (`D`, one row per point) and from
/// the current hand position (`d`) to every goal.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedDistances {
    rows: Vec<Vec<f64>>,
    current: Vec<f64>,
}

impl ModulatedDistances {
    pub fn from_parts(rows: Vec<Vec<f64>>, current: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::precondition("distance matrix needs at least one row"));
        }
        let g = current.len();
        if rows.iter().any(|r| r.len() != g) {
            return Err(Error::invalid("distance matrix rows must have one column per goal"));
        }
        if rows.iter().flatten().chain(current.iter()).any(|d| !(*d >= 0.0)) {
            return Err(Error::invalid("distances must be non-negative"));
        }
        Ok(ModulatedDistances { rows, current })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn goal_count(&self) -> usize {
        self.current.len()
    }

    /// `(min_i D_ij, max_i D_ij)` for goal column `j`.
    pub fn column_range(&self, j: usize) -> (f64, f64) {
        self.rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r[j]), hi.max(r[j]))
        })
    }
}

pub fn modulated_distance_matrix(points: &[Vec3], hand: Vec3, goals: &GoalSet) -> Result<ModulatedDistances> {
    if points.is_empty() {
        return Err(Error::precondition("no candidate points"));
    }
    if goals.is_empty() {
        return Err(Error::precondition("no goals"));
    }
    let rows = points
        .iter()
        .map(|p| goals.iter().map(|g| p.distance(g.position)).collect())
        .collect();
    let current = goals.iter().map(|g| hand.distance(g.position)).collect();
    Ok(ModulatedDistances { rows, current })
}

/// Relative approach of the hand toward goal `j`, clamped to `[0, 1]`.
pub fn approach_ratio(md: &ModulatedDistances, j: usize) -> f64 {
    let (lo, hi) = md.column_range(j);
    let d = md.current[j];
    if hi - lo < DEGENERATE_COLUMN {
        if d <= hi + DEGENERATE_COLUMN {
            1.0
        } else {
            0.0
        }
    } else {
        ((hi - d) / (hi - lo)).clamp(0.0, 1.0)
    }
}

/// Motion validation `v_j = ratio_j · s_j`.
pub fn motion_validation(md: &ModulatedDistances, s: &[f64]) -> Result<ValidationVector> {
    if md.goal_count() != s.len() {
        return Err(Error::InvalidInput(format!(
            "distance matrix has {} goal columns but gaze vector has {} entries",
            md.goal_count(),
            s.len()
        )));
    }
    if s.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid("gaze validation components must lie in [0, 1]"));
    }
    Ok(s.iter().enumerate().map(|(j, sj)| approach_ratio(md, j) * sj).collect())
}
