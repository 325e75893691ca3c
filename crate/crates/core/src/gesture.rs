//! Rule-based hand action labels from a 21-joint skeleton.
//!
//! Joint layout: wrist first, then four joints per finger from base to tip,
//! fingers ordered thumb, index, middle, ring, pinky. The rules below are
//! heuristics on finger curl and thumb-index aperture:
//!
//! | label        | rule                                                        |
//! |--------------|-------------------------------------------------------------|
//! | `Grasped`    | thumb tip to index tip < 3 cm                               |
//! | `Stop`       | every finger curl < 0.5 rad                                 |
//! | `Pointing`   | index curl < 0.5 rad, the other four > 1.5 rad              |
//! | `GraspIntent`| mean curl in [0.5, 1.5] rad and aperture strictly shrinking |
//!
//! Precedence is top to bottom. The grasp-intent rule is a geometric
//! stand-in for what is really a behavioral distinction.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub const JOINT_COUNT: usize = 21;
pub const WRIST: usize = 0;
const MIN_SEGMENT: f64 = 1e-9;

pub const STRAIGHT_CURL: f64 = 0.5;
pub const FOLDED_CURL: f64 = 1.5;
pub const PINCH_DISTANCE: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Pinky,
}

impl Finger {
    pub const ALL: [Finger; 5] = [Finger::Thumb, Finger::Index, Finger::Middle, Finger::Ring, Finger::Pinky];

    /// Joint indices from base to tip.
    pub fn joints(self) -> [usize; 4] {
        let base = 1 + 4 * self as usize;
        [base, base + 1, base + 2, base + 3]
    }

    pub fn tip(self) -> usize {
        self.joints()[3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Gesture {
    GraspIntent,
    Grasped,
    Pointing,
    Stop,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HandSkeleton {
    pub joints: [Vec3; JOINT_COUNT],
}

impl HandSkeleton {
    pub fn new(joints: [Vec3; JOINT_COUNT]) -> Result<Self> {
        if joints.iter().any(|j| !j.is_finite()) {
            return Err(Error::invalid("hand joints must be finite"));
        }
        Ok(HandSkeleton { joints })
    }

    pub fn from_slice(joints: &[Vec3]) -> Result<Self> {
        let joints: [Vec3; JOINT_COUNT] = joints
            .try_into()
            .map_err(|_| Error::InvalidInput(alloc::format!("expected {JOINT_COUNT} joints, got {}", joints.len())))?;
        HandSkeleton::new(joints)
    }

    pub fn joint(&self, index: usize) -> Vec3 {
        self.joints[index]
    }

    /// Applies `f` to every joint.
    pub fn map_joints(&self, f: impl Fn(Vec3) -> Vec3) -> HandSkeleton {
        HandSkeleton { joints: self.joints.map(f) }
    }

    /// Thumb tip to index tip distance, meters.
    pub fn aperture(&self) -> f64 {
        self.joint(Finger::Thumb.tip()).distance(self.joint(Finger::Index.tip()))
    }
}

fn bend_angle(a: Vec3, b: Vec3, c: Vec3) -> Result<f64> {
    let (u, w) = (b - a, c - b);
    let (nu, nw) = (u.norm(), w.norm());
    if nu < MIN_SEGMENT || nw < MIN_SEGMENT {
        return Err(Error::UndefinedPose("coincident finger joints".into()));
    }
    Ok(libm::acos((u.dot(w) / (nu * nw)).clamp(-1.0, 1.0)))
}

/// Sum of the bend angles at the two interior joints of each finger chain.
/// A straight finger has curl 0, two right-angle bends give π.
pub fn finger_curl(skel: &HandSkeleton) -> Result<[f64; 5]> {
    let mut curls = [0.0; 5];
    for (curl, finger) in curls.iter_mut().zip(Finger::ALL) {
        let [a, b, c, d] = finger.joints().map(|i| skel.joint(i));
        *curl = bend_angle(a, b, c)? + bend_angle(b, c, d)?;
    }
    Ok(curls)
}

/// Labels the most recent skeleton in `history` (oldest first).
pub fn classify_gesture(history: &[HandSkeleton]) -> Result<Gesture> {
    let Some(latest) = history.last() else {
        return Err(Error::precondition("gesture classification needs at least one skeleton"));
    };
    let curls = finger_curl(latest)?;
    if latest.aperture() < PINCH_DISTANCE {
        return Ok(Gesture::Grasped);
    }
    if curls.iter().all(|c| *c < STRAIGHT_CURL) {
        return Ok(Gesture::Stop);
    }
    let index = Finger::Index as usize;
    let others_folded = curls.iter().enumerate().filter(|(i, _)| *i != index).all(|(_, c)| *c > FOLDED_CURL);
    if curls[index] < STRAIGHT_CURL && others_folded {
        return Ok(Gesture::Pointing);
    }
    let mean = curls.iter().sum::<f64>() / 5.0;
    if (STRAIGHT_CURL..=FOLDED_CURL).contains(&mean) && history.len() >= 2 {
        let apertures: Vec<f64> = history.iter().map(HandSkeleton::aperture).collect();
        if apertures.windows(2).all(|w| w[1] < w[0]) {
            return Ok(Gesture::GraspIntent);
        }
    }
    Ok(Gesture::None)
}

/// Synthetic right-hand poses in a local frame: wrist at the origin, fingers
/// extending along `+y`, palm facing `-z`.
pub mod fixtures {
    use super::*;

    const SEGMENTS: [f64; 3] = [0.045, 0.025, 0.02];
    const FINGER_BASES: [f64; 4] = [0.03, 0.01, -0.01, -0.03];
    const THUMB_BASE: Vec3 = Vec3::new(0.045, 0.03, 0.0);

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    #[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
    pub enum Named {
        OpenPalm,
        Point,
        Pinch,
        Fist,
        Relaxed,
    }

    fn finger_chain(base: Vec3, bends: [f64; 2]) -> [Vec3; 4] {
        let mut joints = [base; 4];
        let mut angle = 0.0;
        for k in 0..3 {
            if k > 0 {
                angle += bends[k - 1];
            }
            let dir = Vec3::new(0.0, libm::cos(angle), -libm::sin(angle));
            joints[k + 1] = joints[k] + dir * SEGMENTS[k];
        }
        joints
    }

    fn thumb_chain(bends: [f64; 2]) -> [Vec3; 4] {
        let start = Vec3::new(0.6, 0.8, 0.0);
        let mut joints = [THUMB_BASE; 4];
        let mut angle = 0.0;
        for k in 0..3 {
            if k > 0 {
                angle += bends[k - 1];
            }
            joints[k + 1] = joints[k] + start.rotate_z(angle) * (SEGMENTS[k] * 0.8);
        }
        joints
    }

    /// Straight thumb ending at `target`.
    fn thumb_to(target: Vec3) -> [Vec3; 4] {
        core::array::from_fn(|k| THUMB_BASE.lerp(target, k as f64 / 3.0))
    }

    fn assemble(thumb: [Vec3; 4], fingers: [[f64; 2]; 4]) -> HandSkeleton {
        let mut joints = [Vec3::ZERO; JOINT_COUNT];
        joints[1..5].copy_from_slice(&thumb);
        for (f, (x, bends)) in FINGER_BASES.iter().zip(fingers).enumerate() {
            let chain = finger_chain(Vec3::new(-*x, 0.09, 0.0), bends);
            let start = 5 + 4 * f;
            joints[start..start + 4].copy_from_slice(&chain);
        }
        HandSkeleton { joints }
    }

    /// Fingers with uniform PIP/DIP bends and the thumb tip `aperture` meters
    /// below the index tip.
    pub fn curled_with_aperture(bend: f64, aperture: f64) -> HandSkeleton {
        let index_tip = finger_chain(Vec3::new(-FINGER_BASES[0], 0.09, 0.0), [bend, bend])[3];
        assemble(thumb_to(index_tip - Vec3::Z * aperture), [[bend, bend]; 4])
    }

    pub fn open_palm() -> HandSkeleton {
        assemble(thumb_chain([0.0, 0.0]), [[0.0, 0.0]; 4])
    }

    pub fn pointing() -> HandSkeleton {
        let folded = [1.0, 1.0];
        assemble(thumb_chain([0.9, 0.9]), [[0.0, 0.0], folded, folded, folded])
    }

    pub fn fist() -> HandSkeleton {
        assemble(thumb_chain([1.1, 1.1]), [[1.2, 1.2]; 4])
    }

    pub fn pinch() -> HandSkeleton {
        curled_with_aperture(0.6, 0.02)
    }

    pub fn relaxed() -> HandSkeleton {
        curled_with_aperture(0.5, 0.06)
    }

    pub fn named(name: Named) -> HandSkeleton {
        match name {
            Named::OpenPalm => open_palm(),
            Named::Point => pointing(),
            Named::Pinch => pinch(),
            Named::Fist => fist(),
            Named::Relaxed => relaxed(),
        }
    }
}
