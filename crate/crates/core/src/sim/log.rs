//! Trial logs as newline-delimited JSON: one header record, one record per
//! frame, and a footer with the event list.

use super::pedestrian::PedestrianPolicy;
use super::scenario::ScenarioSpec;
use crate::cooperation::{CoopState, EhmiMessage, MonitorParams, TriggerPolicy};
use crate::kinematics::InteractionSnapshot;
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};
use thiserror::Error;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("malformed log: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub version: u32,
    pub scenario: ScenarioSpec,
    pub trigger: TriggerPolicy,
    pub monitor: MonitorParams,
    pub pedestrian: PedestrianPolicy,
    pub dt: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedPose {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub accel: f64,
    /// Signed distance to the HV conflict point.
    pub hv_dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehiclePose {
    pub x: f64,
    pub y: f64,
    /// Signed along-road distance to the crossing line.
    pub dist: f64,
    pub speed: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: usize,
    pub t: f64,
    pub snapshot: InteractionSnapshot,
    pub coop: Option<CoopState>,
    pub ehmi: EhmiMessage,
    pub ped: PedPose,
    pub av: VehiclePose,
    pub hv: VehiclePose,
    pub tdtc_av: Option<f64>,
    pub tdtc_hv: Option<f64>,
    pub hv_resolved: bool,
    /// Straight-line pedestrian-AV distance.
    pub separation: f64,
    /// Externally commanded speed, if any arrived for this frame.
    pub control: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    InteractionOnset,
    EhmiOn,
    CrossingStart,
    StopStart,
    ConflictExit,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub frame: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Crossed,
    Timeout,
    /// Ended from outside before either of the above.
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub header: LogHeader,
    pub frames: Vec<Frame>,
    pub events: Vec<Event>,
    pub termination: Termination,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Header(LogHeader),
    Frame(Frame),
    Footer { events: Vec<Event>, termination: Termination },
}

impl SimLog {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn write_ndjson<W: Write>(&self, mut w: W) -> Result<(), LogError> {
        let mut line = |r: &Record| -> Result<(), LogError> {
            serde_json::to_writer(&mut w, r).map_err(|source| LogError::Json { line: 0, source })?;
            w.write_all(b"\n")?;
            Ok(())
        };
        line(&Record::Header(self.header.clone()))?;
        for f in &self.frames {
            line(&Record::Frame(*f))?;
        }
        line(&Record::Footer { events: self.events.clone(), termination: self.termination })?;
        w.flush()?;
        Ok(())
    }

    pub fn to_ndjson(&self) -> String {
        let mut buf = Vec::new();
        self.write_ndjson(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_ndjson<R: BufRead>(r: R) -> Result<Self, LogError> {
        let mut header = None;
        let mut frames = Vec::new();
        let mut footer = None;
        for (i, l) in r.lines().enumerate() {
            let l = l?;
            if l.trim().is_empty() {
                continue;
            }
            let rec: Record =
                serde_json::from_str(&l).map_err(|source| LogError::Json { line: i + 1, source })?;
            match rec {
                Record::Header(h) if header.is_none() && i == 0 => header = Some(h),
                Record::Frame(f) if header.is_some() && footer.is_none() => frames.push(f),
                Record::Footer { events, termination } if footer.is_none() => {
                    footer = Some((events, termination))
                }
                _ => return Err(LogError::Malformed(format!("unexpected record on line {}", i + 1))),
            }
        }
        let header = header.ok_or_else(|| LogError::Malformed("missing header".into()))?;
        if header.version != LOG_VERSION {
            return Err(LogError::Malformed(format!("unsupported version {}", header.version)));
        }
        let (events, termination) =
            footer.ok_or_else(|| LogError::Malformed("missing footer".into()))?;
        Ok(SimLog { header, frames, events, termination })
    }

    pub fn from_ndjson(s: &str) -> Result<Self, LogError> {
        Self::read_ndjson(s.as_bytes())
    }
}
