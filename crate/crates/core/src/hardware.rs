//! Actuation and power chain: H-bridge pin mapping, throttle/steer slew,
//! a linear battery model and the buck regulator that feeds the camera.

use crate::world::ChassisConfig;

/// Steering command range in whole degrees.
pub const STEER_LIMIT_DEG: i32 = 30;
pub const THROTTLE_LIMIT: i32 = 100;

/// Operator or autonomy drive request: throttle percent and steer degrees.
/// Positive steer turns counter-clockwise (towards +heading).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DriveCommand {
    pub throttle: i8,
    pub steer: i8,
}

impl DriveCommand {
    pub const STOP: DriveCommand = DriveCommand { throttle: 0, steer: 0 };

    /// Clamps raw values into range. The flag reports whether anything was cut.
    pub fn clamped(throttle: i32, steer: i32) -> (Self, bool) {
        let t = throttle.clamp(-THROTTLE_LIMIT, THROTTLE_LIMIT);
        let s = steer.clamp(-STEER_LIMIT_DEG, STEER_LIMIT_DEG);
        let cmd = DriveCommand {
            throttle: t as i8,
            steer: s as i8,
        };
        (cmd, t != throttle || s != steer)
    }
}

/// Actual actuator state after slew limiting; feeds the kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriveState {
    /// Signed m/s.
    pub speed: f64,
    /// Signed radians.
    pub steer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlewLimits {
    /// m/s².
    pub accel_limit: f64,
    /// rad/s.
    pub steer_rate: f64,
}

impl Default for SlewLimits {
    fn default() -> Self {
        Self {
            accel_limit: 1.0,
            steer_rate: 120f64.to_radians(),
        }
    }
}

fn approach(current: f64, target: f64, max_delta: f64) -> f64 {
    let gap = target - current;
    if gap.abs() <= max_delta {
        target
    } else {
        current + max_delta.copysign(gap)
    }
}

/// Moves the drive state one tick towards the command's targets.
pub fn apply_drive_command(
    cmd: DriveCommand,
    prev: DriveState,
    chassis: &ChassisConfig,
    slew: &SlewLimits,
    dt: f64,
) -> DriveState {
    let (cmd, _) = DriveCommand::clamped(cmd.throttle.into(), cmd.steer.into());
    let target_speed = f64::from(cmd.throttle) / 100.0 * chassis.max_speed;
    let target_steer =
        f64::from(cmd.steer).to_radians().clamp(-chassis.max_steer, chassis.max_steer);
    DriveState {
        speed: approach(prev.speed, target_speed, slew.accel_limit * dt),
        steer: approach(prev.steer, target_steer, slew.steer_rate * dt),
    }
}

/// L293D input pins for one motor channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HBridgePins {
    pub in1: bool,
    pub in2: bool,
    pub enable_duty: f64,
}

pub fn hbridge_pins(throttle: i8) -> HBridgePins {
    let duty = f64::from(throttle.unsigned_abs().min(100)) / 100.0;
    match throttle {
        0 => HBridgePins {
            in1: false,
            in2: false,
            enable_duty: 0.0,
        },
        t if t > 0 => HBridgePins {
            in1: true,
            in2: false,
            enable_duty: duty,
        },
        _ => HBridgePins {
            in1: false,
            in2: true,
            enable_duty: duty,
        },
    }
}

/// Pack voltage limits for the linear discharge model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackModel {
    pub v_full: f64,
    pub v_empty: f64,
}

impl Default for PackModel {
    /// 3-cell lithium pack.
    fn default() -> Self {
        Self {
            v_full: 12.6,
            v_empty: 9.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Battery {
    pub voltage: f64,
    /// Ah.
    pub capacity_remaining: f64,
    /// Ah.
    pub nominal_capacity: f64,
    pub model: PackModel,
}

impl Battery {
    pub fn new(nominal_capacity: f64, capacity_remaining: f64, model: PackModel) -> Self {
        let capacity_remaining = capacity_remaining.clamp(0.0, nominal_capacity);
        Self {
            voltage: model_voltage(&model, capacity_remaining, nominal_capacity),
            capacity_remaining,
            nominal_capacity,
            model,
        }
    }

    pub fn full(nominal_capacity: f64, model: PackModel) -> Self {
        Self::new(nominal_capacity, nominal_capacity, model)
    }
}

fn model_voltage(model: &PackModel, remaining: f64, nominal: f64) -> f64 {
    model.v_empty + (model.v_full - model.v_empty) * (remaining / nominal)
}

/// Drains `load_current` amps for `dt` seconds.
pub fn step_battery(batt: Battery, load_current: f64, dt: f64) -> Battery {
    let drawn = load_current.max(0.0) * dt / 3600.0;
    let remaining = (batt.capacity_remaining - drawn).max(0.0);
    Battery {
        voltage: model_voltage(&batt.model, remaining, batt.nominal_capacity),
        capacity_remaining: remaining,
        ..batt
    }
}

/// Current draw model: electronics idle, drive motors proportional to speed,
/// and the camera while its rail is up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadModel {
    pub idle: f64,
    pub motor_full_speed: f64,
    pub camera: f64,
}

impl Default for LoadModel {
    fn default() -> Self {
        Self {
            idle: 0.2,
            motor_full_speed: 1.5,
            camera: 0.3,
        }
    }
}

impl LoadModel {
    pub fn current(&self, speed: f64, max_speed: f64, camera_powered: bool) -> f64 {
        let camera = if camera_powered { self.camera } else { 0.0 };
        self.idle + self.motor_full_speed * speed.abs() / max_speed + camera
    }
}

/// LM2596-style step-down converter, modelled as an ideal rail with a hard
/// dropout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuckConfig {
    pub output: f64,
    pub dropout: f64,
}

impl Default for BuckConfig {
    fn default() -> Self {
        Self {
            output: 5.0,
            dropout: 6.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRail {
    pub rail_voltage: f64,
    pub brownout: bool,
}

pub fn regulate(battery_voltage: f64, buck: &BuckConfig) -> PowerRail {
    if battery_voltage >= buck.dropout {
        PowerRail {
            rail_voltage: buck.output,
            brownout: false,
        }
    } else {
        PowerRail {
            rail_voltage: 0.0,
            brownout: true,
        }
    }
}
