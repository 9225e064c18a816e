//! Scenario definitions, scripted pedestrians and the fixed-step trial loop.

mod engine;
mod log;
mod pedestrian;
mod scenario;

pub use engine::{run_batch, run_trial, Simulation, TrialConfig, PIL_MAX_ACCEL};
pub use log::{
    Event, EventKind, Frame, LogError, LogHeader, PedPose, SimLog, Termination, VehiclePose,
    LOG_VERSION,
};
pub use pedestrian::{
    ped_policy_step, PedContext, PedMemory, PedestrianKind, PedestrianPolicy, WALKING_SPEED,
};
pub use scenario::{
    av_profile_speed, build_scenario, AvProfile, ScenarioId, ScenarioOverrides, ScenarioSpec,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unknown scenario id {0:?}")]
    UnknownScenario(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid pedestrian policy: {0}")]
    InvalidPedestrian(String),
    #[error("invalid trigger policy: {0}")]
    InvalidTrigger(String),
    #[error("time step {0} s outside (0, 0.1]")]
    BadTimeStep(f64),
}
