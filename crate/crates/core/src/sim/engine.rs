use super::log::{Event, EventKind, Frame, LogHeader, PedPose, SimLog, Termination, VehiclePose, LOG_VERSION};
use super::pedestrian::{ped_policy_step, PedContext, PedMemory, PedestrianKind, PedestrianPolicy, WALKING_SPEED};
use super::scenario::{av_profile_speed, build_scenario, ScenarioId, ScenarioSpec};
use super::SimError;
use crate::cooperation::{
    decide_ehmi, EhmiMessage, FrameContext, MonitorParams, TriggerKind, TriggerPolicy, TriggerState,
};
use crate::kinematics::{abs_tdtc, time_to_conflict, AgentKinematics, AgentRole, InteractionSnapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Acceleration limit on externally commanded pedestrian speed (m/s^2).
pub const PIL_MAX_ACCEL: f64 = 2.0;
const MAX_PED_SPEED: f64 = 2.5;
/// |TDTC| and separation below which a pair counts as interacting.
const ONSET_TDTC: f64 = 3.0;
const ONSET_SEPARATION: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub scenario: ScenarioSpec,
    pub trigger: TriggerPolicy,
    pub monitor: MonitorParams,
    pub pedestrian: PedestrianPolicy,
    pub seed: u64,
    pub dt: f64,
    pub max_time: f64,
}

impl TrialConfig {
    pub fn new(scenario: ScenarioId, trigger: TriggerKind, pedestrian: PedestrianKind, seed: u64) -> Self {
        Self {
            scenario: build_scenario(scenario),
            trigger: TriggerPolicy::new(trigger),
            monitor: MonitorParams::default(),
            pedestrian: PedestrianPolicy::new(pedestrian),
            seed,
            dt: 0.05,
            max_time: 60.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(SimError::BadTimeStep(self.dt));
        }
        if !(self.max_time > 0.0 && self.max_time.is_finite()) {
            return Err(SimError::InvalidScenario(format!("max_time {} must be positive", self.max_time)));
        }
        self.scenario.validate()?;
        self.pedestrian.validate()?;
        self.trigger.validate().map_err(SimError::InvalidTrigger)
    }
}

/// A running trial. Frame 0 is recorded on construction; each `step`
/// advances one `dt` and records one frame.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: TrialConfig,
    rng: ChaCha8Rng,
    index: usize,
    ped_progress: f64,
    ped_speed: f64,
    ped_accel: f64,
    av_dist: f64,
    av_speed: f64,
    av_accel: f64,
    hv_dist: f64,
    resolved: bool,
    hv_resolved: bool,
    trigger: TriggerState,
    memory: PedMemory,
    next_target: f64,
    manual_target: f64,
    walking: bool,
    frames: Vec<Frame>,
    events: Vec<Event>,
    termination: Option<Termination>,
}

impl Simulation {
    pub fn new(cfg: TrialConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let spec = cfg.scenario;
        let mut sim = Simulation {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            index: 0,
            ped_progress: 0.0,
            ped_speed: 0.0,
            ped_accel: 0.0,
            av_dist: spec.av_start,
            av_speed: av_profile_speed(&spec, spec.av_start),
            av_accel: 0.0,
            hv_dist: spec.hv_start,
            resolved: false,
            hv_resolved: false,
            trigger: TriggerState::default(),
            memory: PedMemory::default(),
            next_target: 0.0,
            manual_target: 0.0,
            walking: false,
            frames: Vec::new(),
            events: Vec::new(),
            termination: None,
        };
        if cfg.pedestrian.kind != PedestrianKind::Manual {
            // start at the pace the policy would pick if already walking
            sim.ped_speed = cfg.pedestrian.walk_speed;
            let snapshot = sim.snapshot(0.0);
            sim.ped_speed = sim.policy_target(snapshot, EhmiMessage::NONE);
            sim.memory = PedMemory::default();
        }
        sim.record(None);
        Ok(sim)
    }

    pub fn config(&self) -> &TrialConfig {
        &self.cfg
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn last_frame(&self) -> &Frame {
        self.frames.last().expect("frame 0 is recorded on construction")
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_finished(&self) -> bool {
        self.termination.is_some()
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    /// Advances one step. `control` is a commanded pedestrian speed and
    /// only matters for manual pedestrians; the latest command persists.
    pub fn step(&mut self, control: Option<f64>) -> &Frame {
        if self.is_finished() {
            return self.last_frame();
        }
        let dt = self.cfg.dt;
        let spec = self.cfg.scenario;
        self.index += 1;

        let speed = if self.cfg.pedestrian.kind == PedestrianKind::Manual {
            if let Some(c) = control.filter(|c| c.is_finite()) {
                self.manual_target = c.clamp(0.0, MAX_PED_SPEED);
            }
            let dv = (self.manual_target - self.ped_speed).clamp(-PIL_MAX_ACCEL * dt, PIL_MAX_ACCEL * dt);
            self.ped_speed + dv
        } else {
            self.next_target
        };
        self.ped_accel = (speed - self.ped_speed) / dt;
        self.ped_speed = speed;
        self.ped_progress += speed * dt;

        self.av_dist -= self.av_speed * dt;
        let v = av_profile_speed(&spec, self.av_dist);
        self.av_accel = (v - self.av_speed) / dt;
        self.av_speed = v;

        self.hv_dist -= spec.hv_speed * dt;

        self.record(control);
        self.last_frame()
    }

    /// Steps until the trial terminates.
    pub fn run(mut self) -> SimLog {
        while !self.is_finished() {
            self.step(None);
        }
        self.into_log()
    }

    pub fn into_log(self) -> SimLog {
        let cfg = self.cfg;
        SimLog {
            header: LogHeader {
                version: LOG_VERSION,
                scenario: cfg.scenario,
                trigger: cfg.trigger,
                monitor: cfg.monitor,
                pedestrian: cfg.pedestrian,
                dt: cfg.dt,
                seed: cfg.seed,
            },
            frames: self.frames,
            events: self.events,
            termination: self.termination.unwrap_or(Termination::Aborted),
        }
    }

    fn t(&self) -> f64 {
        self.index as f64 * self.cfg.dt
    }

    fn ped_s(&self) -> f64 {
        self.cfg.scenario.ped_to_av_conflict() - self.ped_progress
    }

    fn snapshot(&self, t: f64) -> InteractionSnapshot {
        let ped = AgentKinematics { s: self.ped_s(), v: self.ped_speed, a: self.ped_accel, role: AgentRole::Pedestrian };
        let av = AgentKinematics { s: self.av_dist, v: self.av_speed, a: self.av_accel, role: AgentRole::Av };
        InteractionSnapshot::new(t, ped, av, self.resolved)
    }

    fn policy_target(&mut self, snapshot: InteractionSnapshot, message: EhmiMessage) -> f64 {
        // one draw per frame whatever the policy, so seeds line up across policies
        let noise = self.rng.random_range(-1.0..1.0);
        let ctx = PedContext {
            t: snapshot.t,
            snapshot,
            message,
            on_road: self.ped_progress >= self.cfg.scenario.ped_start_offset,
            noise,
        };
        ped_policy_step(&self.cfg.pedestrian, &ctx, &mut self.memory)
    }

    fn push_event(&mut self, kind: EventKind) {
        self.events.push(Event { t: self.t(), frame: self.index, kind });
    }

    fn record(&mut self, control: Option<f64>) {
        let spec = self.cfg.scenario;
        let hw = spec.zone_half_width;
        let t = self.t();
        let ped_s = self.ped_s();
        let ped_hv_s = spec.ped_to_hv_conflict() - self.ped_progress;

        let was_resolved = self.resolved;
        self.resolved |= ped_s < -hw || self.av_dist < -hw;
        self.hv_resolved |= ped_hv_s < -hw || self.hv_dist < -hw;

        let snapshot = self.snapshot(t);
        let coop = self.cfg.monitor.evaluate(&snapshot);
        let ctx = FrameContext { t, plan: spec.av_plan, av_distance: self.av_dist, resolved: self.resolved };
        let shown_before = self.trigger.message.value.is_shown();
        let ehmi = decide_ehmi(coop.as_ref(), &self.cfg.trigger, &ctx, &mut self.trigger);

        let tdtc_av = snapshot.tdtc();
        let tdtc_hv = if self.hv_resolved {
            None
        } else {
            let t_ped = time_to_conflict(ped_hv_s, self.ped_speed.max(0.0)).unwrap_or(f64::INFINITY);
            Some(abs_tdtc(t_ped, self.hv_dist, spec.hv_speed)).filter(|v| v.is_finite())
        };
        let ped_y = -spec.ped_start_offset + self.ped_progress;
        let av_y = 0.5 * spec.lane_width;
        let separation = (self.av_dist * self.av_dist + (ped_y - av_y).powi(2)).sqrt();

        self.frames.push(Frame {
            index: self.index,
            t,
            snapshot,
            coop,
            ehmi,
            ped: PedPose { x: 0.0, y: ped_y, speed: self.ped_speed, accel: self.ped_accel, hv_dist: ped_hv_s },
            av: VehiclePose { x: -self.av_dist, y: av_y, dist: self.av_dist, speed: self.av_speed, accel: self.av_accel },
            hv: VehiclePose {
                x: self.hv_dist,
                y: 1.5 * spec.lane_width,
                dist: self.hv_dist,
                speed: spec.hv_speed,
                accel: 0.0,
            },
            tdtc_av,
            tdtc_hv,
            hv_resolved: self.hv_resolved,
            separation,
            control,
        });

        if !self.resolved
            && !self.events.iter().any(|e| e.kind == EventKind::InteractionOnset)
            && tdtc_av.is_some_and(|v| v < ONSET_TDTC)
            && separation < ONSET_SEPARATION
        {
            self.push_event(EventKind::InteractionOnset);
        }
        if ehmi.value.is_shown() && !shown_before {
            self.push_event(EventKind::EhmiOn);
        }
        let walking = self.ped_speed >= WALKING_SPEED;
        if walking != self.walking {
            self.push_event(if walking { EventKind::CrossingStart } else { EventKind::StopStart });
            self.walking = walking;
        }
        if self.resolved && !was_resolved {
            self.push_event(EventKind::ConflictExit);
        }

        if self.ped_progress >= spec.ped_to_far_curb() {
            self.termination = Some(Termination::Crossed);
        } else if t >= self.cfg.max_time - 1e-9 {
            self.push_event(EventKind::Timeout);
            self.termination = Some(Termination::Timeout);
        }

        if self.cfg.pedestrian.kind != PedestrianKind::Manual {
            self.next_target = self.policy_target(snapshot, ehmi);
        }
    }
}

pub fn run_trial(cfg: &TrialConfig) -> Result<SimLog, SimError> {
    Ok(Simulation::new(*cfg)?.run())
}

/// Runs the trials on a pool of `workers` threads; output order matches input.
pub fn run_batch(cfgs: &[TrialConfig], workers: usize) -> Result<Vec<SimLog>, SimError> {
    for c in cfgs {
        c.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| cfgs.par_iter().map(run_trial).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooperation::EhmiValue;

    fn trial(s: ScenarioId, t: TriggerKind, p: PedestrianKind) -> SimLog {
        run_trial(&TrialConfig::new(s, t, p, 7)).unwrap()
    }

    #[test]
    fn frame_zero_and_step_timing() {
        let log = trial(ScenarioId::S1, TriggerKind::NoEhmi, PedestrianKind::DecisiveGo);
        assert_eq!(log.frames[0].t, 0.0);
        assert_eq!(log.frames[0].av.dist, 32.0);
        assert_eq!(log.frames[0].av.speed, 7.0);
        for (i, f) in log.frames.iter().enumerate() {
            assert_eq!(f.index, i);
            assert_eq!(f.t, i as f64 * 0.05);
        }
        assert_eq!(log.termination, Termination::Crossed);
    }

    #[test]
    fn av_follows_profile_every_frame() {
        for s in [ScenarioId::S1, ScenarioId::S2] {
            let log = trial(s, TriggerKind::FixedDistance, PedestrianKind::Hesitant);
            for f in &log.frames {
                assert_eq!(f.av.speed, av_profile_speed(&log.header.scenario, f.av.dist));
            }
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = trial(ScenarioId::S1, TriggerKind::IntentRecognition, PedestrianKind::Hesitant);
        let b = trial(ScenarioId::S1, TriggerKind::IntentRecognition, PedestrianKind::Hesitant);
        assert_eq!(a.to_ndjson(), b.to_ndjson());
    }

    #[test]
    fn log_round_trips() {
        let log = trial(ScenarioId::S2, TriggerKind::IntentRecognition, PedestrianKind::DecisiveGo);
        let text = log.to_ndjson();
        let back = SimLog::from_ndjson(&text).unwrap();
        assert_eq!(back.to_ndjson(), text);
        assert_eq!(back.frames.len(), log.frames.len());
    }

    #[test]
    fn manual_speed_is_rate_limited() {
        let cfg = TrialConfig::new(ScenarioId::S1, TriggerKind::NoEhmi, PedestrianKind::Manual, 0);
        let mut sim = Simulation::new(cfg).unwrap();
        assert_eq!(sim.last_frame().ped.speed, 0.0);
        let f = *sim.step(Some(9.0));
        assert!((f.ped.speed - 0.1).abs() < 1e-12);
        for _ in 0..40 {
            sim.step(None);
        }
        assert_eq!(sim.last_frame().ped.speed, MAX_PED_SPEED);
    }

    #[test]
    fn timeout_when_nobody_moves() {
        let mut cfg = TrialConfig::new(ScenarioId::S1, TriggerKind::NoEhmi, PedestrianKind::Manual, 0);
        cfg.max_time = 2.0;
        let log = Simulation::new(cfg).unwrap().run();
        assert_eq!(log.termination, Termination::Timeout);
        assert_eq!(log.events.last().unwrap().kind, EventKind::Timeout);
        assert!((log.frames.last().unwrap().t - 2.0).abs() < 1e-9);
    }

    #[test]
    fn dont_walk_is_never_shown_by_a_yielding_av() {
        let log = trial(ScenarioId::S1, TriggerKind::IntentRecognition, PedestrianKind::Hesitant);
        assert!(log.frames.iter().all(|f| f.ehmi.value != EhmiValue::DontWalk));
    }

    #[test]
    fn bad_dt_rejected() {
        let mut cfg = TrialConfig::new(ScenarioId::S1, TriggerKind::NoEhmi, PedestrianKind::Hesitant, 0);
        cfg.dt = 0.2;
        assert!(matches!(Simulation::new(cfg), Err(SimError::BadTimeStep(_))));
    }

    #[test]
    fn batch_preserves_order() {
        let cfgs: Vec<_> = (0..6)
            .map(|s| TrialConfig::new(ScenarioId::S1, TriggerKind::IntentRecognition, PedestrianKind::Hesitant, s))
            .collect();
        let logs = run_batch(&cfgs, 3).unwrap();
        for (c, l) in cfgs.iter().zip(&logs) {
            assert_eq!(l.header.seed, c.seed);
            assert_eq!(l.to_ndjson(), run_trial(c).unwrap().to_ndjson());
        }
    }
}
