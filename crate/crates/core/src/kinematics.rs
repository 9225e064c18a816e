//! Agent kinematic state, conflict geometry and the scalar arrival-time
//! quantities shared by the recognizer, the monitor and the metrics.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

/// Below this ego time-to-conflict the agent is treated as already at the
/// conflict point and the interaction is resolved.
pub const MIN_TIME_TO_CONFLICT: f64 = 0.05;

/// Default half-width of the conflict zone along each path (m).
pub const DEFAULT_ZONE_HALF_WIDTH: f64 = 1.0;

const ON_PATH_TOLERANCE: f64 = 1e-6;
const INTERSECTION_TOLERANCE: f64 = 1e-9;
const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("agent pose is {offset:.3e} m off its declared path")]
    OffPath { offset: f64 },
    #[error("path direction is not a unit vector (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("paths do not intersect at a single point")]
    Parallel,
    #[error("declared conflict point is {error:.3e} m from the path intersection")]
    ConflictMismatch { error: f64 },
    #[error("negative speed {0} m/s")]
    NegativeSpeed(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("ego time-to-conflict {0} s is below the {MIN_TIME_TO_CONFLICT} s guard or infinite")]
    Singular(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// A straight directed path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectedLine {
    pub origin: Vec2,
    pub direction: Vec2,
}

impl DirectedLine {
    pub fn new(origin: Vec2, direction: Vec2) -> Result<Self, KinematicsError> {
        let norm = direction.norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(KinematicsError::NotUnit { norm });
        }
        Ok(Self { origin, direction })
    }

    /// Builds a line through `origin` heading along `heading`, normalizing it.
    pub fn through(origin: Vec2, heading: Vec2) -> Result<Self, KinematicsError> {
        let norm = heading.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(KinematicsError::NonFinite);
        }
        Self::new(origin, heading * (1.0 / norm))
    }

    pub fn point_at(&self, s: f64) -> Vec2 {
        self.origin + self.direction * s
    }

    /// Perpendicular offset of `p` from the line.
    pub fn offset(&self, p: Vec2) -> f64 {
        self.direction.cross(p - self.origin).abs()
    }

    pub fn intersect(&self, other: &DirectedLine) -> Option<Vec2> {
        let denom = self.direction.cross(other.direction);
        if denom.abs() < 1e-12 {
            return None;
        }
        let s = (other.origin - self.origin).cross(other.direction) / denom;
        Some(self.point_at(s))
    }

    /// Absolute angle between the two path directions, in [0, pi/2].
    pub fn crossing_angle(&self, other: &DirectedLine) -> f64 {
        let c = self.direction.dot(other.direction).abs().min(1.0);
        c.acos()
    }
}

/// Geometry of a pedestrian crossing path against one or two vehicle paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictGeometry {
    pub conflict_point: Vec2,
    pub ped_path: DirectedLine,
    pub av_path: DirectedLine,
    pub hv_path: Option<DirectedLine>,
}

impl ConflictGeometry {
    pub fn new(
        conflict_point: Vec2,
        ped_path: DirectedLine,
        av_path: DirectedLine,
        hv_path: Option<DirectedLine>,
    ) -> Result<Self, KinematicsError> {
        let hit = ped_path.intersect(&av_path).ok_or(KinematicsError::Parallel)?;
        let error = hit.distance(conflict_point);
        if error > INTERSECTION_TOLERANCE {
            return Err(KinematicsError::ConflictMismatch { error });
        }
        Ok(Self { conflict_point, ped_path, av_path, hv_path })
    }

    /// Geometry where the conflict point is the path intersection.
    pub fn from_paths(
        ped_path: DirectedLine,
        av_path: DirectedLine,
        hv_path: Option<DirectedLine>,
    ) -> Result<Self, KinematicsError> {
        let conflict_point = ped_path.intersect(&av_path).ok_or(KinematicsError::Parallel)?;
        Ok(Self { conflict_point, ped_path, av_path, hv_path })
    }

    /// Pedestrian-vs-HV conflict point, when a background vehicle path exists.
    pub fn hv_conflict_point(&self) -> Option<Vec2> {
        self.hv_path.and_then(|hv| self.ped_path.intersect(&hv))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Pedestrian,
    Av,
    Hv,
}

/// Longitudinal state of an agent relative to its conflict point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentKinematics {
    /// Signed distance to the conflict point, positive before it.
    pub s: f64,
    pub v: f64,
    pub a: f64,
    pub role: AgentRole,
}

impl AgentKinematics {
    pub fn time_to_conflict(&self) -> f64 {
        time_to_conflict(self.s, self.v.max(0.0)).unwrap_or(f64::INFINITY)
    }
}

/// Per-frame kinematic state of the pedestrian-AV pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionSnapshot {
    pub t: f64,
    #[serde(with = "inf_as_null")]
    pub ped_ttc: f64,
    #[serde(with = "inf_as_null")]
    pub av_ttc: f64,
    pub ped_dist: f64,
    pub av_dist: f64,
    pub ped_speed: f64,
    pub av_speed: f64,
    pub resolved: bool,
}

impl InteractionSnapshot {
    pub fn new(t: f64, ped: AgentKinematics, av: AgentKinematics, resolved: bool) -> Self {
        Self {
            t,
            ped_ttc: ped.time_to_conflict(),
            av_ttc: av.time_to_conflict(),
            ped_dist: ped.s,
            av_dist: av.s,
            ped_speed: ped.v,
            av_speed: av.v,
            resolved,
        }
    }

    /// |TDTC| of the pair seen from the pedestrian, `None` when infinite or resolved.
    pub fn tdtc(&self) -> Option<f64> {
        if self.resolved {
            return None;
        }
        let v = abs_tdtc(self.ped_ttc, self.av_dist, self.av_speed);
        v.is_finite().then_some(v)
    }
}

/// Signed distance from `position` to the conflict point along `path`.
pub fn distance_to_conflict(
    position: Vec2,
    path: &DirectedLine,
    conflict_point: Vec2,
) -> Result<f64, KinematicsError> {
    let offset = path.offset(position);
    if offset > ON_PATH_TOLERANCE {
        return Err(KinematicsError::OffPath { offset });
    }
    Ok((conflict_point - position).dot(path.direction))
}

pub fn time_to_conflict(d: f64, v: f64) -> Result<f64, KinematicsError> {
    if !d.is_finite() || v.is_nan() {
        return Err(KinematicsError::NonFinite);
    }
    if v < 0.0 {
        return Err(KinematicsError::NegativeSpeed(v));
    }
    if d <= 0.0 {
        Ok(0.0)
    } else if v == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(d / v)
    }
}

/// Minimum constant acceleration of the interacting agent to reach the
/// conflict point together with the ego agent.
pub fn cooperative_acceleration(
    d_int: f64,
    v_int: f64,
    t_self: f64,
) -> Result<f64, KinematicsError> {
    if !t_self.is_finite() || t_self < MIN_TIME_TO_CONFLICT {
        return Err(KinematicsError::Singular(t_self));
    }
    Ok(2.0 * (d_int - v_int * t_self) / (t_self * t_self))
}

/// Absolute time difference to collision. A stopped interactor short of the
/// conflict point never arrives, so the pair has no temporal conflict.
pub fn abs_tdtc(t_self: f64, d_int: f64, v_int: f64) -> f64 {
    let t_int = if v_int <= 0.0 {
        if d_int > 0.0 {
            return f64::INFINITY;
        }
        0.0
    } else {
        d_int / v_int
    };
    if t_self.is_infinite() || t_int.is_infinite() {
        return f64::INFINITY;
    }
    (t_self - t_int).abs()
}

/// Serializes infinite floats as JSON `null` and reads `null` back as +inf.
pub mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
