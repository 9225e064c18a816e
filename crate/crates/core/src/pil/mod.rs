//! Pedestrian-in-the-loop sessions: a manual pedestrian stepped by live
//! control input, the wire format shared with the browser client, and the
//! WebSocket server.

mod server;

pub use server::{router, serve, ServiceState};

use crate::cooperation::{AvPlan, EhmiValue, Region};
use crate::evaluation::{compute_trial_metrics, TrialMetrics};
use crate::sim::{Frame, PedestrianKind, PedestrianPolicy, SimError, SimLog, Simulation, TrialConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Maximum commanded pedestrian speed (m/s).
pub const MAX_TARGET_SPEED: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub target_speed: f64,
    /// Client clock in milliseconds, informational only.
    #[serde(default)]
    pub timestamp: Option<f64>,
}

impl ControlInput {
    pub fn new(target_speed: f64) -> Self {
        Self { target_speed, timestamp: None }
    }

    /// Out-of-range speeds are clamped, never rejected; NaN means stop.
    pub fn clamped_speed(&self) -> f64 {
        if self.target_speed.is_nan() {
            0.0
        } else {
            self.target_speed.clamp(0.0, MAX_TARGET_SPEED)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedView {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvView {
    /// Along-road distance to the pedestrian's path.
    pub distance: f64,
    pub speed: f64,
    pub plan: AvPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HvView {
    pub distance: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoopView {
    pub score: f64,
    pub region: Region,
    pub d_v: f64,
    pub d_p: f64,
}

/// What the client draws for one frame; every field is copied from the
/// logged frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub t: f64,
    pub ped: PedView,
    pub av: AvView,
    pub hv: HvView,
    pub ehmi: EhmiValue,
    pub coop: Option<CoopView>,
    pub tdtc_av: Option<f64>,
    pub resolved: bool,
}

impl StateFrame {
    pub fn from_frame(f: &Frame, plan: AvPlan) -> Self {
        Self {
            t: f.t,
            ped: PedView { x: f.ped.x, y: f.ped.y, speed: f.ped.speed },
            av: AvView { distance: f.av.dist, speed: f.av.speed, plan },
            hv: HvView { distance: f.hv.dist, speed: f.hv.speed },
            ehmi: f.ehmi.value,
            coop: f.coop.map(|c| CoopView { score: c.score, region: c.region, d_v: c.d_v, d_p: c.d_p }),
            tdtc_av: f.tdtc_av,
            resolved: f.snapshot.resolved,
        }
    }
}

fn round6(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r = (x * 1e6).round() / 1e6;
            // no "-0.0" on the wire
            *v = serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r }).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round6),
        Value::Object(o) => o.values_mut().for_each(round6),
        _ => {}
    }
}

fn tagged(kind: &str, body: impl Serialize) -> String {
    let mut v = serde_json::to_value(body).expect("plain data serializes");
    round6(&mut v);
    let mut out = Map::new();
    out.insert("type".into(), Value::String(kind.into()));
    if let Value::Object(o) = v {
        out.extend(o);
    }
    Value::Object(out).to_string()
}

/// `{"type":"frame",...}` with numbers rounded to 6 decimals.
pub fn encode_frame(frame: &StateFrame) -> String {
    tagged("frame", frame)
}

pub fn decode_frame(text: &str) -> Result<StateFrame, serde_json::Error> {
    serde_json::from_str(text)
}

/// `{"type":"summary",...}` sent once the trial has terminated.
pub fn encode_summary(m: &TrialMetrics) -> String {
    tagged("summary", m)
}

pub fn encode_error(message: &str) -> String {
    serde_json::json!({ "type": "error", "message": message }).to_string()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Control {
        target_speed: f64,
        #[serde(default)]
        timestamp: Option<f64>,
    },
    Start {
        scenario: String,
        policy: String,
    },
}

/// One live trial. The pedestrian is always manual; the latest control
/// persists until a newer one arrives, and none at all means stand still.
#[derive(Debug, Clone)]
pub struct Session {
    sim: Simulation,
}

impl Session {
    pub fn new(mut cfg: TrialConfig) -> Result<Self, SimError> {
        cfg.pedestrian = PedestrianPolicy::new(PedestrianKind::Manual);
        Ok(Self { sim: Simulation::new(cfg)? })
    }

    pub fn config(&self) -> &TrialConfig {
        self.sim.config()
    }

    pub fn current(&self) -> StateFrame {
        let mut f = StateFrame::from_frame(self.sim.last_frame(), self.config().scenario.av_plan);
        f.resolved |= self.sim.is_finished();
        f
    }

    /// Advances one step under `control`. Once the trial has terminated the
    /// terminal frame is returned again and nothing is appended.
    pub fn step(&mut self, control: Option<&ControlInput>) -> StateFrame {
        if !self.sim.is_finished() {
            self.sim.step(control.map(ControlInput::clamped_speed));
        }
        self.current()
    }

    pub fn is_finished(&self) -> bool {
        self.sim.is_finished()
    }

    pub fn frames(&self) -> &[Frame] {
        self.sim.frames()
    }

    pub fn log(&self) -> SimLog {
        self.sim.clone().into_log()
    }

    pub fn summary(&self) -> Option<TrialMetrics> {
        self.is_finished().then(|| compute_trial_metrics(&self.log()).ok()).flatten()
    }
}

/// The per-step control stream recorded in a session log.
pub fn recorded_controls(log: &SimLog) -> Vec<Option<f64>> {
    log.frames.iter().skip(1).map(|f| f.control).collect()
}

/// Re-runs a manual trial offline from its per-step control stream.
pub fn replay_controls(cfg: &TrialConfig, controls: &[Option<f64>]) -> Result<SimLog, SimError> {
    let mut s = Session::new(*cfg)?;
    for c in controls {
        s.step(c.map(ControlInput::new).as_ref());
    }
    Ok(s.sim.into_log())
}
