//! Simulation core for a teleoperated wildlife-observation rover.
//!
//! The crate models the rover's chassis, drive electronics, power chain,
//! ultrasonic ranger and pan camera in a 2D obstacle world, runs the
//! stop-and-turn avoidance behaviour, and defines the binary wire protocol
//! and session-log format used to drive and observe it.
//!
//! All of it is deterministic: the same seed, world, configuration and
//! command script produce byte-identical output.

pub mod autonomy;
pub mod config;
pub mod hardware;
pub mod protocol;
pub mod script;
pub mod sensing;
pub mod session;
pub mod sim;
pub mod world;
pub mod worldgen;

pub use autonomy::{arbitrate, step_autonomy, AutonomyParams, AutonomyState, Mode, Phase, TurnStyle};
pub use config::{parse_config, ServiceConfig, SimConfig};
pub use hardware::{DriveCommand, DriveState};
pub use protocol::{decode, encode, DecodeError, Decoded, Message, StreamDecoder, Telemetry};
pub use sim::Simulation;
pub use world::{load_world, Pose, World};
