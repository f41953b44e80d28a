//! Forward ultrasonic ranger and the pan/tilt night-vision camera.
//!
//! The ranger is a five-ray fan cast from the rover's nose. Range noise comes
//! from the caller-owned [`SensorRng`] (ChaCha8 seeded from the service seed,
//! Gaussian samples via `rand_distr::Normal`); with `noise_sigma == 0` the
//! generator is never touched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::world::{raycast, ChassisConfig, Pose, Vec2, World};

pub type SensorRng = ChaCha8Rng;

pub fn sensor_rng(seed: u64) -> SensorRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Speed of sound used for echo timing, m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

const FAN_RAYS: usize = 5;

/// Rounds half-up. The tiny bias absorbs representation error on exact
/// decimal ties such as 0.295 / 0.01.
pub fn round_half_up(v: f64) -> f64 {
    (v + 0.5 + 1e-9).floor()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltrasonicConfig {
    pub max_range: f64,
    /// Degrees either side of the heading.
    pub beam_halfwidth: f64,
    pub quantum: f64,
    pub noise_sigma: f64,
}

impl Default for UltrasonicConfig {
    fn default() -> Self {
        Self {
            max_range: 4.0,
            beam_halfwidth: 15.0,
            quantum: 0.01,
            noise_sigma: 0.0,
        }
    }
}

impl UltrasonicConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err("ultrasonic max_range must be positive".into());
        }
        if !(self.quantum > 0.0 && self.quantum.is_finite()) {
            return Err("ultrasonic quantum must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err("ultrasonic noise_sigma must be non-negative".into());
        }
        if !(self.beam_halfwidth >= 0.0 && self.beam_halfwidth < 90.0) {
            return Err("ultrasonic beam_halfwidth must be in [0, 90)".into());
        }
        Ok(())
    }

    /// Snaps a raw distance onto the quantum grid, or `None` past max range.
    pub fn quantize(&self, distance: f64) -> Option<f64> {
        if distance > self.max_range {
            return None;
        }
        let steps = round_half_up(distance.max(0.0) / self.quantum);
        let q = steps * self.quantum;
        (q <= self.max_range + self.quantum * 1e-9).then_some(q)
    }

    /// Echo duration (µs) corresponding to a round trip of `max_range`.
    pub fn echo_timeout_us(&self) -> f64 {
        2.0 * self.max_range / SPEED_OF_SOUND * 1e6
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltrasonicReading {
    /// Meters, `None` when out of range.
    pub range: Option<f64>,
    pub tick: u64,
}

impl UltrasonicReading {
    pub fn is_closer_than(&self, distance: f64) -> bool {
        self.range.is_some_and(|r| r < distance)
    }
}

/// Fan ray directions, uniformly spread from `-halfwidth` to `+halfwidth`.
pub fn fan_angles(heading: f64, cfg: &UltrasonicConfig) -> [f64; FAN_RAYS] {
    let hw = cfg.beam_halfwidth.to_radians();
    let mut out = [0.0; FAN_RAYS];
    for (i, a) in out.iter_mut().enumerate() {
        *a = heading - hw + 2.0 * hw * i as f64 / (FAN_RAYS - 1) as f64;
    }
    out
}

/// Where the ranger sits: `body_radius` ahead of the pose along the heading.
pub fn sensor_origin(pose: &Pose, chassis: &ChassisConfig) -> Vec2 {
    pose.position().add_scaled(pose.forward(), chassis.body_radius)
}

pub fn read_ultrasonic(
    world: &World,
    pose: &Pose,
    chassis: &ChassisConfig,
    cfg: &UltrasonicConfig,
    tick: u64,
    rng: &mut SensorRng,
) -> UltrasonicReading {
    let origin = sensor_origin(pose, chassis);
    let nearest = fan_angles(pose.heading, cfg)
        .iter()
        .filter_map(|&a| raycast(world, origin, Vec2::from_angle(a), cfg.max_range))
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |m| m.min(d))));

    let range = nearest.and_then(|d| {
        let noisy = if cfg.noise_sigma > 0.0 {
            let normal = Normal::new(0.0, cfg.noise_sigma).expect("sigma validated");
            d + normal.sample(rng)
        } else {
            d
        };
        cfg.quantize(noisy.max(0.0))
    });
    UltrasonicReading { range, tick }
}

/// HC-SR04 convention: distance is half the sound path of the echo pulse.
/// Returns the raw (unquantized) distance, or `None` past the timeout.
pub fn echo_to_distance(echo_duration_us: f64, cfg: &UltrasonicConfig) -> Option<f64> {
    if echo_duration_us.is_nan() || echo_duration_us < 0.0 || echo_duration_us > cfg.echo_timeout_us() {
        return None;
    }
    Some(SPEED_OF_SOUND * (echo_duration_us * 1e-6) / 2.0)
}

pub const TILT_LIMIT: f64 = 30.0;

/// Camera gimbal angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GimbalState {
    pub pan: f64,
    pub tilt: f64,
}

pub fn pan_camera(gimbal: GimbalState, delta_pan: f64, delta_tilt: f64) -> GimbalState {
    let mut pan = (gimbal.pan + delta_pan).rem_euclid(360.0);
    if pan >= 360.0 {
        pan = 0.0;
    }
    GimbalState {
        pan,
        tilt: (gimbal.tilt + delta_tilt).clamp(-TILT_LIMIT, TILT_LIMIT),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    /// Horizontal field of view, degrees.
    pub fov: f64,
    /// Depth at which a column renders black.
    pub range: f64,
    pub width: u16,
    pub height: u16,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            fov: 60.0,
            range: 8.0,
            width: 120,
            height: 90,
        }
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.width < 2 || self.height < 1 {
            return Err("camera needs at least 2x1 pixels".into());
        }
        if !(self.fov > 0.0 && self.fov < 360.0) {
            return Err("camera fov must be in (0, 360)".into());
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err("camera range must be positive".into());
        }
        Ok(())
    }

    /// Ray angle for column `c`, relative to the camera axis, in radians.
    pub fn column_offset(&self, c: u16) -> f64 {
        let frac = f64::from(c) / f64::from(self.width - 1) - 0.5;
        (self.fov * frac).to_radians()
    }
}

/// Grayscale shade for a column depth: near is bright, `range` and beyond is black.
pub fn depth_shade(depth: f64, range: f64) -> u8 {
    let v = round_half_up(255.0 * (1.0 - depth.min(range) / range));
    v.clamp(0.0, 255.0) as u8
}

/// Grayscale image, row-major from the top row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub tick: u64,
    pub pan: u16,
    pub width: u16,
    pub height: u16,
    pub pixels: Vec<u8>,
}

impl Frame {
    /// Binary PGM (`P5`, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n255\n", self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Renders one depth-strip frame looking along `heading + pan`.
pub fn render_frame(
    world: &World,
    pose: &Pose,
    gimbal: &GimbalState,
    tick: u64,
    cam: &CameraConfig,
) -> Frame {
    let axis = pose.heading + gimbal.pan.to_radians();
    let origin = pose.position();
    let width = usize::from(cam.width);
    let shades: Vec<u8> = (0..cam.width)
        .map(|c| {
            let dir = Vec2::from_angle(axis + cam.column_offset(c));
            let depth = raycast(world, origin, dir, cam.range).unwrap_or(cam.range);
            depth_shade(depth, cam.range)
        })
        .collect();

    let mut pixels = Vec::with_capacity(width * usize::from(cam.height));
    for _ in 0..cam.height {
        pixels.extend_from_slice(&shades);
    }
    Frame {
        tick,
        pan: wire_pan(gimbal.pan),
        width: cam.width,
        height: cam.height,
        pixels,
    }
}

/// Pan in whole degrees, as carried on the wire.
pub fn wire_pan(pan: f64) -> u16 {
    (round_half_up(pan) as u16) % 360
}
