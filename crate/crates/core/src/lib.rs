pub mod calibration;
pub mod cli;
pub mod config;
pub mod cooperation;
pub mod evaluation;
pub mod intent;
pub mod kinematics;
pub mod pil;
pub mod sim;
