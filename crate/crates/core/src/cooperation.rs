//! Cooperation state between the pedestrian and the AV, and the eHMI
//! trigger policies built on top of it.

use crate::intent::{tau_boundary, BoundaryParams};
use crate::kinematics::{InteractionSnapshot, MIN_TIME_TO_CONFLICT};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const DEFAULT_GAIN: f64 = 1.0;

/// Quadrant of the discriminant plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Pedestrian first, AV yields.
    A,
    /// Both yield.
    B,
    /// Pedestrian yields, AV first.
    C,
    /// Both proceed.
    D,
}

impl Region {
    pub fn is_conflict(self) -> bool {
        matches!(self, Region::B | Region::D)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Discriminant distances in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discriminants {
    pub d_p: f64,
    pub d_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoopState {
    pub t: f64,
    pub d_v: f64,
    pub d_p: f64,
    pub s_v: f64,
    pub s_p: f64,
    pub score: f64,
    pub region: Region,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Deviations of each agent's arrival time from the other's boundary curve.
/// `None` when either agent is stopped, at, or past the conflict point.
pub fn discriminant_distances(
    ped_ttc: f64,
    av_ttc: f64,
    ped_params: &BoundaryParams,
    av_params: &BoundaryParams,
    av_speed: f64,
    ped_speed: f64,
) -> Option<Discriminants> {
    let valid = |t: f64| t.is_finite() && t >= MIN_TIME_TO_CONFLICT;
    if !valid(ped_ttc) || !valid(av_ttc) {
        return None;
    }
    let tau_v = tau_boundary(ped_params, ped_ttc, av_speed).ok()?;
    let tau_p = tau_boundary(av_params, av_ttc, ped_speed).ok()?;
    Some(Discriminants { d_p: ped_ttc - tau_p, d_v: av_ttc - tau_v })
}

pub fn coop_score(d_v: f64, d_p: f64, k: f64) -> f64 {
    let s_v = sigmoid(k * d_v);
    let s_p = sigmoid(k * d_p);
    s_v * (1.0 - s_p) + s_p * (1.0 - s_v)
}

/// Same-signed distances are the conflict quadrants; zeros fall into the
/// convergence quadrants.
pub fn classify_region(d_v: f64, d_p: f64) -> Region {
    if d_v < 0.0 && d_p < 0.0 {
        Region::B
    } else if d_v > 0.0 && d_p > 0.0 {
        Region::D
    } else if d_v <= 0.0 && d_p >= 0.0 {
        Region::C
    } else {
        Region::A
    }
}

impl CoopState {
    pub fn from_distances(t: f64, d: Discriminants, k: f64) -> Self {
        let s_v = sigmoid(k * d.d_v);
        let s_p = sigmoid(k * d.d_p);
        CoopState {
            t,
            d_v: d.d_v,
            d_p: d.d_p,
            s_v,
            s_p,
            score: coop_score(d.d_v, d.d_p, k),
            region: classify_region(d.d_v, d.d_p),
        }
    }
}

/// Boundary pair and sigmoid gain used to evaluate cooperation each frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorParams {
    pub ped: BoundaryParams,
    pub av: BoundaryParams,
    pub k: f64,
}

impl Default for MonitorParams {
    fn default() -> Self {
        Self { ped: BoundaryParams::PED_VS_AV, av: BoundaryParams::AV_VS_PED, k: DEFAULT_GAIN }
    }
}

impl MonitorParams {
    pub fn evaluate(&self, snap: &InteractionSnapshot) -> Option<CoopState> {
        if snap.resolved {
            return None;
        }
        let d = discriminant_distances(
            snap.ped_ttc,
            snap.av_ttc,
            &self.ped,
            &self.av,
            snap.av_speed,
            snap.ped_speed,
        )?;
        Some(CoopState::from_distances(snap.t, d, self.k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    NoEhmi,
    FixedDistance,
    IntentRecognition,
}

impl TriggerKind {
    pub fn short_name(self) -> &'static str {
        match self {
            TriggerKind::NoEhmi => "none",
            TriggerKind::FixedDistance => "fixed",
            TriggerKind::IntentRecognition => "ir",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" | "no_ehmi" => Some(TriggerKind::NoEhmi),
            "fixed" | "fixed_distance" => Some(TriggerKind::FixedDistance),
            "ir" | "intent_recognition" => Some(TriggerKind::IntentRecognition),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerPolicy {
    pub kind: TriggerKind,
    pub distance_threshold: f64,
    pub score_threshold: f64,
    pub debounce: f64,
    pub latch: bool,
}

impl TriggerPolicy {
    pub fn new(kind: TriggerKind) -> Self {
        Self { kind, distance_threshold: 25.0, score_threshold: 0.9, debounce: 0.5, latch: true }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.distance_threshold > 0.0) {
            return Err(format!("distance_threshold must be > 0, got {}", self.distance_threshold));
        }
        if !(self.score_threshold > 0.0 && self.score_threshold < 1.0) {
            return Err(format!("score_threshold must be in (0,1), got {}", self.score_threshold));
        }
        if !(self.debounce >= 0.0) {
            return Err(format!("debounce must be >= 0, got {}", self.debounce));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvPlan {
    Yield,
    NonYield,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum EhmiValue {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "WALK")]
    Walk,
    #[serde(rename = "DONT_WALK")]
    DontWalk,
}

impl EhmiValue {
    pub fn for_plan(plan: AvPlan) -> Self {
        match plan {
            AvPlan::Yield => EhmiValue::Walk,
            AvPlan::NonYield => EhmiValue::DontWalk,
        }
    }

    pub fn is_shown(self) -> bool {
        self != EhmiValue::None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EhmiMessage {
    pub value: EhmiValue,
    pub activated_at: Option<f64>,
}

impl EhmiMessage {
    pub const NONE: EhmiMessage = EhmiMessage { value: EhmiValue::None, activated_at: None };
}

/// What the trigger sees about the current frame besides the cooperation state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameContext {
    pub t: f64,
    pub plan: AvPlan,
    /// Along-road distance from the AV to the pedestrian's crossing line.
    pub av_distance: f64,
    pub resolved: bool,
}

/// Per-trial trigger memory: the current message and when the intent
/// conflict condition started holding.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TriggerState {
    pub message: EhmiMessage,
    pub conflict_since: Option<f64>,
}

// Slack so a condition that started exactly `debounce` seconds ago counts
// despite accumulated float error in frame times.
const TIME_EPS: f64 = 1e-9;

/// Advances the trigger by one frame and returns the message to display.
pub fn decide_ehmi(
    state: Option<&CoopState>,
    policy: &TriggerPolicy,
    ctx: &FrameContext,
    memory: &mut TriggerState,
) -> EhmiMessage {
    let show = |memory: &TriggerState| EhmiMessage {
        value: EhmiValue::for_plan(ctx.plan),
        activated_at: memory.message.activated_at.or(Some(ctx.t)),
    };
    let next = match policy.kind {
        TriggerKind::NoEhmi => EhmiMessage::NONE,
        TriggerKind::FixedDistance => {
            if ctx.av_distance >= 0.0 && ctx.av_distance <= policy.distance_threshold {
                show(memory)
            } else {
                EhmiMessage::NONE
            }
        }
        TriggerKind::IntentRecognition => {
            let conflict = !ctx.resolved
                && state.is_some_and(|s| s.region.is_conflict() && s.score < policy.score_threshold);
            memory.conflict_since = match (conflict, memory.conflict_since) {
                (true, Some(t0)) => Some(t0),
                (true, None) => Some(ctx.t),
                (false, _) => None,
            };
            let debounced =
                memory.conflict_since.is_some_and(|t0| ctx.t - t0 + TIME_EPS >= policy.debounce);
            let latched = policy.latch && memory.message.value.is_shown() && !ctx.resolved;
            if debounced || latched {
                show(memory)
            } else {
                EhmiMessage::NONE
            }
        }
    };
    memory.message = next;
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(d_v: f64, d_p: f64) -> CoopState {
        CoopState::from_distances(0.0, Discriminants { d_v, d_p }, 1.0)
    }

    fn ctx(t: f64, plan: AvPlan, av_distance: f64) -> FrameContext {
        FrameContext { t, plan, av_distance, resolved: false }
    }

    #[test]
    fn discriminant_example() {
        let d = discriminant_distances(
            2.0,
            3.0,
            &BoundaryParams::PED_VS_AV,
            &BoundaryParams::AV_VS_PED,
            7.0,
            1.4,
        )
        .unwrap();
        // closed-form tau substitution
        let tau_v = 2.0 - (-0.0032 * 4.0 + 0.2503) / (2.0 * 0.0469 * 7.0);
        let tau_p = 3.0 - (-0.0288 * 9.0 + 0.7601) / (2.0 * 0.1769 * 1.4);
        assert!((d.d_v - (3.0 - tau_v)).abs() < 1e-12);
        assert!((d.d_p - (2.0 - tau_p)).abs() < 1e-12);
        assert!((d.d_v - 1.3617).abs() < 1e-4);
        assert!((d.d_p - 0.0113).abs() < 1e-4);
    }

    #[test]
    fn on_boundary_distances_vanish() {
        let (ped, av) = (BoundaryParams::PED_VS_AV, BoundaryParams::AV_VS_PED);
        let tv = tau_boundary(&ped, 2.0, 7.0).unwrap();
        let d = discriminant_distances(2.0, tv, &ped, &av, 7.0, 1.4).unwrap();
        assert!(d.d_v.abs() < 1e-12);
        let tp = tau_boundary(&av, 3.0, 1.4).unwrap();
        let d = discriminant_distances(tp, 3.0, &ped, &av, 7.0, 1.4).unwrap();
        assert!(d.d_p.abs() < 1e-12);
    }

    #[test]
    fn stopped_or_arrived_agents_have_no_distances() {
        let (ped, av) = (BoundaryParams::PED_VS_AV, BoundaryParams::AV_VS_PED);
        assert!(discriminant_distances(2.0, 3.0, &ped, &av, 0.0, 1.4).is_none());
        assert!(discriminant_distances(f64::INFINITY, 3.0, &ped, &av, 7.0, 0.0).is_none());
        assert!(discriminant_distances(0.01, 3.0, &ped, &av, 7.0, 1.4).is_none());
    }

    #[test]
    fn score_examples() {
        assert_eq!(coop_score(0.0, 0.0, 1.0), 0.5);
        assert!((coop_score(1e3, -1e3, 1.0) - 1.0).abs() < 1e-12);
        assert!((coop_score(-3.0, -3.0, 1.0) - 0.09035331946182427).abs() < 1e-12);
    }

    #[test]
    fn region_examples() {
        assert_eq!(classify_region(-1.0, -1.0), Region::B);
        assert_eq!(classify_region(2.0, 3.0), Region::D);
        assert_eq!(classify_region(2.0, -1.0), Region::A);
        assert_eq!(classify_region(-2.0, 1.0), Region::C);
        assert_eq!(classify_region(0.0, -1.0), Region::A);
        assert_eq!(classify_region(0.0, 1.0), Region::C);
        assert_eq!(classify_region(1.0, 0.0), Region::A);
        assert_eq!(classify_region(-1.0, 0.0), Region::C);
        assert_eq!(classify_region(0.0, 0.0), Region::C);
    }

    #[test]
    fn fixed_distance_shows_walk_inside_threshold() {
        let p = TriggerPolicy::new(TriggerKind::FixedDistance);
        let mut m = TriggerState::default();
        let out = decide_ehmi(None, &p, &ctx(1.0, AvPlan::Yield, 24.9), &mut m);
        assert_eq!(out.value, EhmiValue::Walk);
        assert_eq!(out.activated_at, Some(1.0));
        let out = decide_ehmi(None, &p, &ctx(1.05, AvPlan::Yield, 24.5), &mut m);
        assert_eq!(out.activated_at, Some(1.0));
        let mut m = TriggerState::default();
        assert_eq!(decide_ehmi(None, &p, &ctx(0.0, AvPlan::Yield, 25.1), &mut m), EhmiMessage::NONE);
    }

    #[test]
    fn ir_stays_dark_in_aligned_region() {
        let p = TriggerPolicy::new(TriggerKind::IntentRecognition);
        let s = state(4.0, -4.0);
        assert_eq!(s.region, Region::A);
        assert!(s.score > 0.95);
        let mut m = TriggerState::default();
        for i in 0..40 {
            let out = decide_ehmi(Some(&s), &p, &ctx(i as f64 * 0.05, AvPlan::Yield, 20.0), &mut m);
            assert_eq!(out, EhmiMessage::NONE);
        }
    }

    fn run_constant(s: &CoopState, plan: AvPlan, frames: usize) -> Vec<EhmiMessage> {
        let p = TriggerPolicy::new(TriggerKind::IntentRecognition);
        let mut m = TriggerState::default();
        (0..frames)
            .map(|i| decide_ehmi(Some(s), &p, &ctx(i as f64 * 0.05, plan, 20.0), &mut m))
            .collect()
    }

    #[test]
    fn ir_walk_after_debounce_in_mutual_hesitation() {
        let s = state(-0.4, -0.1);
        assert_eq!(s.region, Region::B);
        let out = run_constant(&s, AvPlan::Yield, 12);
        assert!(out[..10].iter().all(|m| !m.value.is_shown()));
        assert_eq!(out[10].value, EhmiValue::Walk);
        assert!((out[10].activated_at.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ir_dont_walk_in_mutual_proceed() {
        let s = state(0.6, 0.9);
        assert_eq!(s.region, Region::D);
        assert!(s.score < 0.9);
        let out = run_constant(&s, AvPlan::NonYield, 12);
        assert_eq!(out[11].value, EhmiValue::DontWalk);
    }

    #[test]
    fn ir_debounce_resets_when_condition_breaks() {
        let p = TriggerPolicy::new(TriggerKind::IntentRecognition);
        let bad = state(-0.4, -0.1);
        let good = state(4.0, -4.0);
        let mut m = TriggerState::default();
        for i in 0..30 {
            let s = if i % 8 == 7 { &good } else { &bad };
            let out = decide_ehmi(Some(s), &p, &ctx(i as f64 * 0.05, AvPlan::Yield, 20.0), &mut m);
            assert!(!out.value.is_shown(), "frame {i}");
        }
    }

    #[test]
    fn latch_holds_until_resolved() {
        let p = TriggerPolicy::new(TriggerKind::IntentRecognition);
        let bad = state(-0.4, -0.1);
        let mut m = TriggerState::default();
        for i in 0..=10 {
            decide_ehmi(Some(&bad), &p, &ctx(i as f64 * 0.05, AvPlan::Yield, 20.0), &mut m);
        }
        assert!(m.message.value.is_shown());
        let out = decide_ehmi(None, &p, &ctx(0.6, AvPlan::Yield, 20.0), &mut m);
        assert_eq!(out.value, EhmiValue::Walk);
        assert_eq!(out.activated_at, Some(0.5));
        let mut c = ctx(0.65, AvPlan::Yield, 20.0);
        c.resolved = true;
        assert_eq!(decide_ehmi(None, &p, &c, &mut m), EhmiMessage::NONE);
    }

    #[test]
    fn unlatched_message_follows_condition() {
        let mut p = TriggerPolicy::new(TriggerKind::IntentRecognition);
        p.latch = false;
        let bad = state(-0.4, -0.1);
        let mut m = TriggerState::default();
        for i in 0..=10 {
            decide_ehmi(Some(&bad), &p, &ctx(i as f64 * 0.05, AvPlan::Yield, 20.0), &mut m);
        }
        assert!(m.message.value.is_shown());
        assert_eq!(decide_ehmi(None, &p, &ctx(0.6, AvPlan::Yield, 20.0), &mut m), EhmiMessage::NONE);
    }

    #[test]
    fn policy_validation() {
        assert!(TriggerPolicy::new(TriggerKind::FixedDistance).validate().is_ok());
        let mut p = TriggerPolicy::new(TriggerKind::IntentRecognition);
        p.score_threshold = 1.0;
        assert!(p.validate().is_err());
        p.score_threshold = 0.9;
        p.distance_threshold = 0.0;
        assert!(p.validate().is_err());
    }

    fn any_state() -> impl Strategy<Value = Option<CoopState>> {
        proptest::option::of((-20.0..20.0f64, -20.0..20.0f64).prop_map(|(a, b)| state(a, b)))
    }

    proptest! {
        #[test]
        fn score_is_bounded_and_symmetric(d_v in -50.0..50.0f64, d_p in -50.0..50.0f64, k in 0.01..10.0f64) {
            let s = coop_score(d_v, d_p, k);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s, coop_score(d_p, d_v, k));
            prop_assert!((s - coop_score(-d_v, -d_p, k)).abs() < 1e-12);
        }

        #[test]
        fn conflict_regions_score_below_half(d_v in -50.0..50.0f64, d_p in -50.0..50.0f64) {
            let s = state(d_v, d_p);
            if s.region.is_conflict() {
                prop_assert!(s.score < 0.5);
            }
        }

        #[test]
        fn no_ehmi_never_shows(states in proptest::collection::vec(any_state(), 1..60),
                               dist in -5.0..40.0f64) {
            let p = TriggerPolicy::new(TriggerKind::NoEhmi);
            let mut m = TriggerState::default();
            for (i, s) in states.iter().enumerate() {
                let out = decide_ehmi(s.as_ref(), &p, &ctx(i as f64 * 0.05, AvPlan::Yield, dist), &mut m);
                prop_assert_eq!(out, EhmiMessage::NONE);
            }
        }

        #[test]
        fn latched_message_persists(states in proptest::collection::vec(any_state(), 1..80)) {
            let p = TriggerPolicy::new(TriggerKind::IntentRecognition);
            let mut m = TriggerState::default();
            let mut on = false;
            for (i, s) in states.iter().enumerate() {
                let out = decide_ehmi(s.as_ref(), &p, &ctx(i as f64 * 0.05, AvPlan::NonYield, 10.0), &mut m);
                if on {
                    prop_assert_eq!(out.value, EhmiValue::DontWalk);
                }
                on |= out.value.is_shown();
            }
        }
    }
}
