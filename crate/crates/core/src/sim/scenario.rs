use super::SimError;
use crate::cooperation::AvPlan;
use crate::kinematics::{ConflictGeometry, DirectedLine, Vec2, DEFAULT_ZONE_HALF_WIDTH};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ScenarioId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "S1" | "s1" => Ok(ScenarioId::S1),
            "S2" | "s2" => Ok(ScenarioId::S2),
            other => Err(SimError::UnknownScenario(other.to_string())),
        }
    }
}

/// Open-loop longitudinal profile of the AV, indexed by its distance to
/// the pedestrian's crossing line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AvProfile {
    Constant,
    /// Cruise, brake at constant deceleration from `decel_start`, and stand
    /// still `stop_offset` metres short of the crossing line.
    StopBefore { decel_start: f64, stop_offset: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    /// Initial AV distance to the crossing line (m).
    pub av_start: f64,
    pub av_cruise: f64,
    pub av_plan: AvPlan,
    pub profile: AvProfile,
    /// Initial HV distance to the crossing line, opposite lane (m).
    pub hv_start: f64,
    pub hv_speed: f64,
    pub lane_width: f64,
    /// Pedestrian start, metres behind the near curb.
    pub ped_start_offset: f64,
    pub zone_half_width: f64,
}

/// Partial scenario parameters read from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverrides {
    pub av_start: Option<f64>,
    pub av_cruise: Option<f64>,
    pub decel_start: Option<f64>,
    pub stop_offset: Option<f64>,
    pub hv_start: Option<f64>,
    pub hv_speed: Option<f64>,
    pub lane_width: Option<f64>,
    pub ped_start_offset: Option<f64>,
    pub zone_half_width: Option<f64>,
}

pub fn build_scenario(id: ScenarioId) -> ScenarioSpec {
    let base = ScenarioSpec {
        id,
        av_start: 32.0,
        av_cruise: 7.0,
        av_plan: AvPlan::Yield,
        profile: AvProfile::StopBefore { decel_start: 15.0, stop_offset: 2.5 },
        hv_start: 35.0,
        hv_speed: 7.0,
        lane_width: 3.5,
        ped_start_offset: 4.5,
        zone_half_width: DEFAULT_ZONE_HALF_WIDTH,
    };
    match id {
        ScenarioId::S1 => base,
        ScenarioId::S2 => ScenarioSpec {
            av_start: 35.0,
            av_plan: AvPlan::NonYield,
            profile: AvProfile::Constant,
            ped_start_offset: 3.75,
            ..base
        },
    }
}

impl ScenarioSpec {
    pub fn with_overrides(mut self, o: &ScenarioOverrides) -> Result<Self, SimError> {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { self.$f = v; })* };
        }
        set!(av_start, av_cruise, hv_start, hv_speed, lane_width, ped_start_offset, zone_half_width);
        match &mut self.profile {
            AvProfile::StopBefore { decel_start, stop_offset } => {
                if let Some(v) = o.decel_start {
                    *decel_start = v;
                }
                if let Some(v) = o.stop_offset {
                    *stop_offset = v;
                }
            }
            AvProfile::Constant => {
                if o.decel_start.is_some() || o.stop_offset.is_some() {
                    return Err(SimError::InvalidScenario(format!(
                        "{} has a constant-speed AV; braking overrides do not apply",
                        self.id
                    )));
                }
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        let positive = [
            ("av_start", self.av_start),
            ("av_cruise", self.av_cruise),
            ("hv_start", self.hv_start),
            ("hv_speed", self.hv_speed),
            ("lane_width", self.lane_width),
            ("zone_half_width", self.zone_half_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.ped_start_offset >= 0.0) {
            return bad(format!("ped_start_offset must be >= 0, got {}", self.ped_start_offset));
        }
        match (self.av_plan, self.profile) {
            (AvPlan::Yield, AvProfile::StopBefore { decel_start, stop_offset }) => {
                if !(0.0 < stop_offset && stop_offset < decel_start && decel_start < self.av_start) {
                    return bad(format!(
                        "need 0 < stop_offset ({stop_offset}) < decel_start ({decel_start}) < av_start ({})",
                        self.av_start
                    ));
                }
                Ok(())
            }
            (AvPlan::NonYield, AvProfile::Constant) => Ok(()),
            (plan, profile) => bad(format!("plan {plan:?} does not match profile {profile:?}")),
        }
    }

    /// Braking deceleration magnitude of a stopping profile (m/s^2).
    pub fn deceleration(&self) -> Option<f64> {
        match self.profile {
            AvProfile::StopBefore { decel_start, stop_offset } => {
                Some(self.av_cruise * self.av_cruise / (2.0 * (decel_start - stop_offset)))
            }
            AvProfile::Constant => None,
        }
    }

    pub fn road_width(&self) -> f64 {
        2.0 * self.lane_width
    }

    /// Pedestrian path length from the start to the AV conflict point.
    pub fn ped_to_av_conflict(&self) -> f64 {
        self.ped_start_offset + 0.5 * self.lane_width
    }

    pub fn ped_to_hv_conflict(&self) -> f64 {
        self.ped_start_offset + 1.5 * self.lane_width
    }

    pub fn ped_to_far_curb(&self) -> f64 {
        self.ped_start_offset + self.road_width()
    }

    /// Crossing line at x = 0, near curb at y = 0, AV in the near lane
    /// heading +x, HV in the far lane heading -x.
    pub fn geometry(&self) -> ConflictGeometry {
        let ped = DirectedLine::new(Vec2::new(0.0, -self.ped_start_offset), Vec2::new(0.0, 1.0))
            .expect("unit direction");
        let av = DirectedLine::new(
            Vec2::new(-self.av_start, 0.5 * self.lane_width),
            Vec2::new(1.0, 0.0),
        )
        .expect("unit direction");
        let hv = DirectedLine::new(
            Vec2::new(self.hv_start, 1.5 * self.lane_width),
            Vec2::new(-1.0, 0.0),
        )
        .expect("unit direction");
        ConflictGeometry::from_paths(ped, av, Some(hv)).expect("perpendicular paths intersect")
    }
}

pub fn av_profile_speed(spec: &ScenarioSpec, distance_to_ped_path: f64) -> f64 {
    match spec.profile {
        AvProfile::Constant => spec.av_cruise,
        AvProfile::StopBefore { decel_start, stop_offset } => {
            let d = distance_to_ped_path;
            if d > decel_start {
                spec.av_cruise
            } else if d > stop_offset {
                let a = spec.deceleration().unwrap_or_default();
                (2.0 * a * (d - stop_offset)).sqrt()
            } else {
                0.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s1_parameters() {
        let s = build_scenario(ScenarioId::S1);
        assert_eq!(s.av_start, 32.0);
        assert_eq!(s.av_cruise, 7.0);
        assert_eq!(s.av_plan, AvPlan::Yield);
        assert_eq!(s.profile, AvProfile::StopBefore { decel_start: 15.0, stop_offset: 2.5 });
        assert_eq!(s.hv_speed, 7.0);
        assert!((s.deceleration().unwrap() - 1.96).abs() < 1e-12);
        s.validate().unwrap();
    }

    #[test]
    fn s2_parameters() {
        let s = build_scenario(ScenarioId::S2);
        assert_eq!(s.av_start, 35.0);
        assert_eq!(s.av_plan, AvPlan::NonYield);
        assert_eq!(s.profile, AvProfile::Constant);
        assert_eq!(s.hv_speed, 7.0);
        s.validate().unwrap();
    }

    #[test]
    fn unknown_id() {
        assert!(matches!("S3".parse::<ScenarioId>(), Err(SimError::UnknownScenario(_))));
    }

    #[test]
    fn s1_profile_points() {
        let s = build_scenario(ScenarioId::S1);
        assert_eq!(av_profile_speed(&s, 20.0), 7.0);
        assert_eq!(av_profile_speed(&s, 15.0), 7.0);
        assert_eq!(av_profile_speed(&s, 2.5), 0.0);
        assert!((av_profile_speed(&s, 10.0) - 5.422176684690384).abs() < 1e-12);
    }

    #[test]
    fn s2_profile_is_flat() {
        let s = build_scenario(ScenarioId::S2);
        for d in [35.0, 20.0, 2.5, 0.0, -3.0] {
            assert_eq!(av_profile_speed(&s, d), 7.0);
        }
    }

    #[test]
    fn overrides_apply_and_validate() {
        let s = build_scenario(ScenarioId::S1);
        let o = ScenarioOverrides { decel_start: Some(20.0), ..Default::default() };
        let t = s.with_overrides(&o).unwrap();
        assert_eq!(t.profile, AvProfile::StopBefore { decel_start: 20.0, stop_offset: 2.5 });
        let o = ScenarioOverrides { decel_start: Some(40.0), ..Default::default() };
        assert!(s.with_overrides(&o).is_err());
        let o = ScenarioOverrides { stop_offset: Some(1.0), ..Default::default() };
        assert!(build_scenario(ScenarioId::S2).with_overrides(&o).is_err());
    }

    #[test]
    fn geometry_places_conflicts_on_lane_centres() {
        let s = build_scenario(ScenarioId::S1);
        let g = s.geometry();
        assert!(g.conflict_point.distance(Vec2::new(0.0, 1.75)) < 1e-12);
        assert!(g.hv_conflict_point().unwrap().distance(Vec2::new(0.0, 5.25)) < 1e-12);
    }
}
