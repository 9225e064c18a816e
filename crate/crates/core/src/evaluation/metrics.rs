use crate::cooperation::AvPlan;
use crate::sim::{Frame, SimLog, Termination, WALKING_SPEED};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ONSET_TDTC: f64 = 3.0;
const ONSET_SEPARATION: f64 = 35.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("log has no frames")]
    Empty,
    #[error("log was aborted before the trial terminated")]
    Incomplete,
}

/// Times measured from the interaction onset (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionTimes {
    /// Absolute time of the onset frame.
    pub onset: f64,
    pub it: f64,
    /// Yielding AV only.
    pub cit: Option<f64>,
    /// Non-yielding AV only.
    pub sit: Option<f64>,
    pub ht: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// `None` when the onset condition never held.
    pub interaction: Option<InteractionTimes>,
    pub min_abs_tdtc_av: Option<f64>,
    pub min_abs_tdtc_hv: Option<f64>,
    pub ehmi_count: usize,
    pub ehmi_first_t: Option<f64>,
}

fn is_onset(f: &Frame) -> bool {
    !f.snapshot.resolved
        && f.tdtc_av.is_some_and(|v| v < ONSET_TDTC)
        && f.separation < ONSET_SEPARATION
}

fn walking(f: &Frame) -> bool {
    f.ped.speed >= WALKING_SPEED
}

/// Start of the walking run that carries the pedestrian out of the AV lane.
fn crossing_start(frames: &[Frame], onset: usize, lane_width: f64) -> Option<usize> {
    let clear = frames.iter().position(|f| f.ped.y >= lane_width)?;
    if clear < onset || !walking(&frames[clear]) {
        return None;
    }
    let mut start = clear;
    while start > onset && walking(&frames[start - 1]) {
        start -= 1;
    }
    Some(start)
}

fn min_opt(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    it.flatten().reduce(f64::min)
}

pub fn compute_trial_metrics(log: &SimLog) -> Result<TrialMetrics, MetricsError> {
    let frames = &log.frames;
    if frames.is_empty() {
        return Err(MetricsError::Empty);
    }
    if log.termination == Termination::Aborted {
        return Err(MetricsError::Incomplete);
    }
    let dt = log.header.dt;
    let spec = &log.header.scenario;

    let mut ehmi_count = 0;
    let mut ehmi_first_t = None;
    let mut shown = false;
    for f in frames {
        let now = f.ehmi.value.is_shown();
        if now && !shown {
            ehmi_count += 1;
            ehmi_first_t.get_or_insert(f.t);
        }
        shown = now;
    }

    let interaction = frames.iter().position(is_onset).map(|o| {
        let resolved = frames.iter().position(|f| f.snapshot.resolved).unwrap_or(frames.len() - 1);
        let start = crossing_start(frames, o, spec.lane_width);
        let span = |i: usize| i.saturating_sub(o) as f64 * dt;
        let cit = match spec.av_plan {
            AvPlan::Yield => start.map(span),
            AvPlan::NonYield => None,
        };
        let sit = match spec.av_plan {
            AvPlan::NonYield => frames[o..]
                .iter()
                .position(|f| {
                    !walking(f) && !f.snapshot.resolved && f.av.speed > 0.0 && f.av.dist > 0.0
                })
                .map(|i| i as f64 * dt),
            AvPlan::Yield => None,
        };
        let end = match start {
            Some(c) if spec.av_plan == AvPlan::Yield => c,
            Some(c) => c.min(resolved),
            None => resolved,
        };
        let paused = frames[o..end.max(o)]
            .iter()
            .filter(|f| !walking(f) && f.ped.accel <= 0.0)
            .count();
        InteractionTimes { onset: frames[o].t, it: span(resolved), cit, sit, ht: paused as f64 * dt }
    });

    Ok(TrialMetrics {
        interaction,
        min_abs_tdtc_av: min_opt(frames.iter().map(|f| f.tdtc_av)),
        min_abs_tdtc_hv: min_opt(frames.iter().map(|f| f.tdtc_hv)),
        ehmi_count,
        ehmi_first_t,
    })
}
