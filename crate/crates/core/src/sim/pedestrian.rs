//! Scripted pedestrian behaviours. Each returns a target speed that the
//! engine applies on the following frame.

use super::SimError;
use crate::cooperation::{EhmiMessage, EhmiValue};
use crate::kinematics::InteractionSnapshot;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Speed at or above which the pedestrian counts as walking (m/s).
pub const WALKING_SPEED: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PedestrianKind {
    DecisiveGo,
    DecisiveYield,
    Hesitant,
    EhmiResponsive,
    /// Speed commanded from outside, e.g. a participant in the loop.
    Manual,
}

impl PedestrianKind {
    pub const SCRIPTED: [PedestrianKind; 4] = [
        PedestrianKind::DecisiveGo,
        PedestrianKind::DecisiveYield,
        PedestrianKind::Hesitant,
        PedestrianKind::EhmiResponsive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PedestrianKind::DecisiveGo => "decisive_go",
            PedestrianKind::DecisiveYield => "decisive_yield",
            PedestrianKind::Hesitant => "hesitant",
            PedestrianKind::EhmiResponsive => "ehmi_responsive",
            PedestrianKind::Manual => "manual",
        }
    }
}

impl fmt::Display for PedestrianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PedestrianKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Self::SCRIPTED.as_slice(), &[PedestrianKind::Manual]]
            .concat()
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| SimError::InvalidPedestrian(format!("unknown pedestrian {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianPolicy {
    pub kind: PedestrianKind,
    pub walk_speed: f64,
    /// AV arrival-time band (s) in which a hesitant pedestrian creeps.
    pub hesitation_band: (f64, f64),
    pub reaction_delay: f64,
    pub creep_speed: f64,
    /// Relative amplitude of the uniform noise on the creep speed.
    pub creep_noise: f64,
}

impl PedestrianPolicy {
    pub fn new(kind: PedestrianKind) -> Self {
        Self {
            kind,
            walk_speed: 1.4,
            hesitation_band: (2.0, 4.0),
            reaction_delay: 0.8,
            creep_speed: 0.3,
            creep_noise: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidPedestrian(m));
        let (lo, hi) = self.hesitation_band;
        if !(self.walk_speed >= WALKING_SPEED && self.walk_speed.is_finite()) {
            return bad(format!("walk_speed must be >= {WALKING_SPEED}, got {}", self.walk_speed));
        }
        if !(0.0 <= lo && lo < hi && hi.is_finite()) {
            return bad(format!("hesitation band ({lo}, {hi}) must satisfy 0 <= lo < hi"));
        }
        if !(self.reaction_delay >= 0.0) {
            return bad(format!("reaction_delay must be >= 0, got {}", self.reaction_delay));
        }
        if !(self.creep_speed >= 0.0 && self.creep_speed * (1.0 + self.creep_noise) < WALKING_SPEED)
        {
            return bad("creep speed must stay below the walking threshold".into());
        }
        if !(0.0..1.0).contains(&self.creep_noise) {
            return bad(format!("creep_noise must be in [0, 1), got {}", self.creep_noise));
        }
        Ok(())
    }
}

/// Everything a scripted pedestrian looks at in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedContext {
    pub t: f64,
    pub snapshot: InteractionSnapshot,
    pub message: EhmiMessage,
    /// Already past the near curb, i.e. on the carriageway.
    pub on_road: bool,
    /// Uniform draw in [-1, 1) for this frame.
    pub noise: f64,
}

/// Cues the eHMI-responsive pedestrian has seen; they persist after the
/// display goes dark.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PedMemory {
    pub walk_seen: Option<f64>,
    pub stop_seen: Option<f64>,
}

// The AV no longer threatens the crossing once it stands still short of
// the crossing line or the interaction has resolved.
fn av_clear(s: &InteractionSnapshot) -> bool {
    s.resolved || s.av_ttc.is_infinite()
}

fn hesitant(p: &PedestrianPolicy, ctx: &PedContext) -> f64 {
    let t_v = ctx.snapshot.av_ttc;
    let (lo, hi) = p.hesitation_band;
    if av_clear(&ctx.snapshot) || t_v > hi {
        p.walk_speed
    } else if t_v >= lo {
        p.creep_speed * (1.0 + p.creep_noise * ctx.noise)
    } else if ctx.on_road {
        // stopping in the lane is worse than finishing the crossing
        p.walk_speed
    } else {
        0.0
    }
}

pub fn ped_policy_step(p: &PedestrianPolicy, ctx: &PedContext, memory: &mut PedMemory) -> f64 {
    match p.kind {
        PedestrianKind::DecisiveGo => p.walk_speed,
        PedestrianKind::DecisiveYield => {
            if av_clear(&ctx.snapshot) {
                p.walk_speed
            } else {
                0.0
            }
        }
        PedestrianKind::Hesitant => hesitant(p, ctx),
        PedestrianKind::EhmiResponsive => {
            match ctx.message.value {
                EhmiValue::Walk if memory.walk_seen.is_none() => memory.walk_seen = Some(ctx.t),
                EhmiValue::DontWalk if memory.stop_seen.is_none() => memory.stop_seen = Some(ctx.t),
                _ => {}
            }
            let reacted = |seen: Option<f64>| seen.is_some_and(|t0| ctx.t - t0 + 1e-9 >= p.reaction_delay);
            if reacted(memory.walk_seen) {
                p.walk_speed
            } else if reacted(memory.stop_seen) {
                if av_clear(&ctx.snapshot) {
                    p.walk_speed
                } else {
                    0.0
                }
            } else {
                hesitant(p, ctx)
            }
        }
        PedestrianKind::Manual => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{AgentKinematics, AgentRole};

    fn snap(t: f64, av_dist: f64, av_speed: f64, resolved: bool) -> InteractionSnapshot {
        let ped = AgentKinematics { s: 3.0, v: 1.0, a: 0.0, role: AgentRole::Pedestrian };
        let av = AgentKinematics { s: av_dist, v: av_speed, a: 0.0, role: AgentRole::Av };
        InteractionSnapshot::new(t, ped, av, resolved)
    }

    fn ctx(t: f64, av_ttc: f64, message: EhmiMessage) -> PedContext {
        PedContext { t, snapshot: snap(t, 7.0 * av_ttc, 7.0, false), message, on_road: false, noise: 0.0 }
    }

    fn step(kind: PedestrianKind, c: &PedContext) -> f64 {
        ped_policy_step(&PedestrianPolicy::new(kind), c, &mut PedMemory::default())
    }

    #[test]
    fn decisive_policies() {
        let c = ctx(0.0, 1.0, EhmiMessage::NONE);
        assert_eq!(step(PedestrianKind::DecisiveGo, &c), 1.4);
        assert_eq!(step(PedestrianKind::DecisiveYield, &c), 0.0);
        let stopped = PedContext { snapshot: snap(0.0, 3.0, 0.0, false), ..c };
        assert_eq!(step(PedestrianKind::DecisiveYield, &stopped), 1.4);
        let done = PedContext { snapshot: snap(0.0, -3.0, 7.0, true), ..c };
        assert_eq!(step(PedestrianKind::DecisiveYield, &done), 1.4);
    }

    #[test]
    fn hesitant_bands() {
        let h = |t_v, noise, on_road| {
            let c = PedContext { noise, on_road, ..ctx(0.0, t_v, EhmiMessage::NONE) };
            step(PedestrianKind::Hesitant, &c)
        };
        assert_eq!(h(5.0, 0.0, false), 1.4);
        assert_eq!(h(3.0, 0.0, false), 0.3);
        assert!((h(3.0, 1.0, false) - 0.33).abs() < 1e-12);
        assert!((h(3.0, -1.0, false) - 0.27).abs() < 1e-12);
        assert_eq!(h(1.0, 0.0, false), 0.0);
        assert_eq!(h(1.0, 0.0, true), 1.4);
    }

    #[test]
    fn responsive_reacts_after_delay() {
        let p = PedestrianPolicy::new(PedestrianKind::EhmiResponsive);
        let mut m = PedMemory::default();
        let walk = EhmiMessage { value: EhmiValue::Walk, activated_at: Some(3.0) };
        // hesitant before the cue has been digested (T_v in the band)
        assert_eq!(ped_policy_step(&p, &ctx(3.0, 1.0, walk), &mut m), 0.0);
        assert_eq!(ped_policy_step(&p, &ctx(3.75, 1.0, walk), &mut m), 0.0);
        assert_eq!(ped_policy_step(&p, &ctx(3.8, 1.0, walk), &mut m), 1.4);
        // the cue persists when the display goes dark
        assert_eq!(ped_policy_step(&p, &ctx(4.0, 1.0, EhmiMessage::NONE), &mut m), 1.4);
    }

    #[test]
    fn responsive_stops_on_dont_walk() {
        let p = PedestrianPolicy::new(PedestrianKind::EhmiResponsive);
        let mut m = PedMemory::default();
        let stop = EhmiMessage { value: EhmiValue::DontWalk, activated_at: Some(1.0) };
        assert_eq!(ped_policy_step(&p, &ctx(1.0, 5.0, stop), &mut m), 1.4);
        assert_eq!(ped_policy_step(&p, &ctx(1.8, 5.0, stop), &mut m), 0.0);
        let mut c = ctx(3.0, 5.0, stop);
        c.snapshot = snap(3.0, -2.0, 7.0, true);
        assert_eq!(ped_policy_step(&p, &c, &mut m), 1.4);
    }

    #[test]
    fn parse_and_validate() {
        for k in PedestrianKind::SCRIPTED {
            assert_eq!(k.as_str().parse::<PedestrianKind>().unwrap(), k);
            PedestrianPolicy::new(k).validate().unwrap();
        }
        assert!("bold".parse::<PedestrianKind>().is_err());
        let mut p = PedestrianPolicy::new(PedestrianKind::Hesitant);
        p.hesitation_band = (4.0, 2.0);
        assert!(p.validate().is_err());
    }
}
