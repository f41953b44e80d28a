//! Service configuration: a line-oriented `key = value` file.
//!
//! ```text
//! # rover.conf
//! world_path = worlds/meadow.world
//! tick_hz = 50
//! chassis.wheelbase = 0.15
//! autonomy.stop_distance = 0.50
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors. Angles are given in degrees.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::autonomy::{AutonomyParams, Mode, TurnStyle};
use crate::hardware::{BuckConfig, LoadModel, PackModel, SlewLimits};
use crate::sensing::{CameraConfig, UltrasonicConfig};
use crate::world::ChassisConfig;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Where the rover starts. `None` fields default to the world centre,
/// facing +x.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StartPose {
    pub x: Option<f64>,
    pub y: Option<f64>,
    /// Degrees.
    pub heading: f64,
}

/// Everything the simulation loop needs besides the world itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub tick_hz: u32,
    pub frame_every: u32,
    pub telemetry_every: u32,
    pub seed: u64,
    pub record_dir: Option<PathBuf>,
    /// Start a session log at tick 0.
    pub record_on_start: bool,
    /// Deadman timeout for operator drive commands, seconds.
    pub command_timeout: f64,
    pub initial_mode: Mode,
    pub start: StartPose,
    pub chassis: ChassisConfig,
    pub slew: SlewLimits,
    pub ultrasonic: UltrasonicConfig,
    pub camera: CameraConfig,
    pub autonomy: AutonomyParams,
    pub pack: PackModel,
    /// Ah.
    pub battery_capacity: f64,
    /// Ah at start; `None` means full.
    pub battery_initial: Option<f64>,
    pub load: LoadModel,
    pub buck: BuckConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tick_hz: 50,
            frame_every: 5,
            telemetry_every: 1,
            seed: 0,
            record_dir: None,
            record_on_start: false,
            command_timeout: 0.5,
            initial_mode: Mode::Manual,
            start: StartPose::default(),
            chassis: ChassisConfig::default(),
            slew: SlewLimits::default(),
            ultrasonic: UltrasonicConfig::default(),
            camera: CameraConfig::default(),
            autonomy: AutonomyParams::default(),
            pack: PackModel::default(),
            battery_capacity: 2.0,
            battery_initial: None,
            load: LoadModel::default(),
            buck: BuckConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn dt(&self) -> f64 {
        1.0 / f64::from(self.tick_hz)
    }

    /// Deadman timeout expressed in ticks (rounded up).
    pub fn command_timeout_ticks(&self) -> u64 {
        (self.command_timeout * f64::from(self.tick_hz) - 1e-9).ceil().max(0.0) as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.tick_hz == 0 {
            return bad("tick_hz must be positive");
        }
        if self.frame_every == 0 || self.telemetry_every == 0 {
            return bad("frame_every and telemetry_every must be at least 1");
        }
        if !(self.command_timeout >= 0.0 && self.command_timeout.is_finite()) {
            return bad("command_timeout must be non-negative");
        }
        if !(self.battery_capacity > 0.0 && self.battery_capacity.is_finite()) {
            return bad("power.capacity_ah must be positive");
        }
        if let Some(init) = self.battery_initial {
            if !(0.0..=self.battery_capacity).contains(&init) {
                return bad("power.initial_ah must be within [0, capacity_ah]");
            }
        }
        if !(self.pack.v_full > self.pack.v_empty && self.pack.v_empty >= 0.0) {
            return bad("power.v_full must exceed power.v_empty >= 0");
        }
        let invalid = |e: String| ConfigError::Invalid(e);
        self.chassis.validate().map_err(invalid)?;
        self.ultrasonic.validate().map_err(invalid)?;
        self.camera.validate().map_err(invalid)?;
        self.autonomy
            .validate(self.ultrasonic.max_range)
            .map_err(invalid)?;
        if !(self.slew.accel_limit > 0.0 && self.slew.steer_rate > 0.0) {
            return bad("slew limits must be positive");
        }
        let frame_pixels = usize::from(self.camera.width) * usize::from(self.camera.height);
        if frame_pixels > crate::protocol::MAX_VIDEO_PIXELS {
            return bad("camera resolution does not fit in one wire frame");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub world_path: Option<PathBuf>,
    pub listen_tcp: String,
    pub listen_ws: String,
    /// Directory holding the operator console assets served at `/`.
    pub console_dir: Option<PathBuf>,
    /// Per-connection outbound queue bound, in messages.
    pub queue_capacity: usize,
    pub sim: SimConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            world_path: None,
            listen_tcp: "127.0.0.1:7700".into(),
            listen_ws: "127.0.0.1:7701".into(),
            console_dir: None,
            queue_capacity: 64,
            sim: SimConfig::default(),
        }
    }
}

impl ServiceConfig {
    /// Resolves relative paths against `base` (the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.world_path,
            &mut self.console_dir,
            &mut self.sim.record_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.queue_capacity == 0 {
            return Err(ConfigError::Invalid("queue_capacity must be positive".into()));
        }
        self.sim.validate()
    }
}

fn parse_value<T: FromStr>(raw: &str) -> Result<T, String> {
    raw.parse::<T>()
        .map_err(|_| format!("cannot parse `{raw}` as {}", std::any::type_name::<T>()))
}

fn parse_f64(raw: &str) -> Result<f64, String> {
    let v: f64 = parse_value(raw)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{raw}` is not finite"))
    }
}

fn parse_bool(raw: &str) -> Result<bool, String> {
    match raw {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("`{raw}` is not a boolean")),
    }
}

fn parse_opt_path(raw: &str) -> Option<PathBuf> {
    (!raw.is_empty() && raw != "none").then(|| PathBuf::from(raw))
}

fn apply(cfg: &mut ServiceConfig, key: &str, raw: &str) -> Result<(), String> {
    let sim = &mut cfg.sim;
    match key {
        "world_path" => cfg.world_path = parse_opt_path(raw),
        "listen_tcp" => cfg.listen_tcp = raw.to_string(),
        "listen_ws" => cfg.listen_ws = raw.to_string(),
        "console_dir" => cfg.console_dir = parse_opt_path(raw),
        "queue_capacity" => cfg.queue_capacity = parse_value(raw)?,

        "tick_hz" => sim.tick_hz = parse_value(raw)?,
        "frame_every" => sim.frame_every = parse_value(raw)?,
        "telemetry_every" => sim.telemetry_every = parse_value(raw)?,
        "seed" => sim.seed = parse_value(raw)?,
        "record_dir" => sim.record_dir = parse_opt_path(raw),
        "record_on_start" => sim.record_on_start = parse_bool(raw)?,
        "command_timeout" => sim.command_timeout = parse_f64(raw)?,
        "initial_mode" => {
            sim.initial_mode = match raw.to_ascii_lowercase().as_str() {
                "manual" => Mode::Manual,
                "auto" => Mode::Auto,
                _ => return Err(format!("mode must be `manual` or `auto`, got `{raw}`")),
            }
        }
        "start.x" => sim.start.x = Some(parse_f64(raw)?),
        "start.y" => sim.start.y = Some(parse_f64(raw)?),
        "start.heading_deg" => sim.start.heading = parse_f64(raw)?,

        "chassis.wheelbase" => sim.chassis.wheelbase = parse_f64(raw)?,
        "chassis.max_speed" => sim.chassis.max_speed = parse_f64(raw)?,
        "chassis.max_steer_deg" => sim.chassis.max_steer = parse_f64(raw)?.to_radians(),
        "chassis.body_radius" => sim.chassis.body_radius = parse_f64(raw)?,
        "chassis.accel_limit" => sim.slew.accel_limit = parse_f64(raw)?,
        "chassis.steer_rate_deg" => sim.slew.steer_rate = parse_f64(raw)?.to_radians(),

        "ultrasonic.max_range" => sim.ultrasonic.max_range = parse_f64(raw)?,
        "ultrasonic.beam_halfwidth_deg" => sim.ultrasonic.beam_halfwidth = parse_f64(raw)?,
        "ultrasonic.quantum" => sim.ultrasonic.quantum = parse_f64(raw)?,
        "ultrasonic.noise_sigma" => sim.ultrasonic.noise_sigma = parse_f64(raw)?,

        "camera.fov_deg" => sim.camera.fov = parse_f64(raw)?,
        "camera.range" => sim.camera.range = parse_f64(raw)?,
        "camera.width" => sim.camera.width = parse_value(raw)?,
        "camera.height" => sim.camera.height = parse_value(raw)?,

        "autonomy.stop_distance" => sim.autonomy.stop_distance = parse_f64(raw)?,
        "autonomy.clear_distance" => sim.autonomy.clear_distance = parse_f64(raw)?,
        "autonomy.turn_angle_deg" => sim.autonomy.turn_angle = parse_f64(raw)?,
        "autonomy.cruise_throttle" => sim.autonomy.cruise_throttle = parse_value(raw)?,
        "autonomy.max_turn_attempts" => sim.autonomy.max_turn_attempts = parse_value(raw)?,
        "autonomy.turn_tolerance_deg" => sim.autonomy.turn_tolerance = parse_f64(raw)?,
        "autonomy.turn_style" => {
            sim.autonomy.turn_style = TurnStyle::parse(raw)
                .ok_or_else(|| format!("turn style must be `arc` or `shuffle`, got `{raw}`"))?
        }
        "autonomy.shuffle_leg_deg" => sim.autonomy.shuffle_leg = parse_f64(raw)?,
        "autonomy.guard_distance" => sim.autonomy.guard_distance = parse_f64(raw)?,

        "power.capacity_ah" => sim.battery_capacity = parse_f64(raw)?,
        "power.initial_ah" => sim.battery_initial = Some(parse_f64(raw)?),
        "power.v_full" => sim.pack.v_full = parse_f64(raw)?,
        "power.v_empty" => sim.pack.v_empty = parse_f64(raw)?,
        "power.idle_current" => sim.load.idle = parse_f64(raw)?,
        "power.motor_current" => sim.load.motor_full_speed = parse_f64(raw)?,
        "power.camera_current" => sim.load.camera = parse_f64(raw)?,
        "power.rail_voltage" => sim.buck.output = parse_f64(raw)?,
        "power.dropout_voltage" => sim.buck.dropout = parse_f64(raw)?,

        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Parses and validates a configuration file. Keys not present keep their
/// defaults.
pub fn parse_config(text: &str) -> Result<ServiceConfig, ConfigError> {
    let mut cfg = ServiceConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ConfigError::Line {
            line: idx + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        apply(&mut cfg, key.trim(), value.trim()).map_err(err)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
