//! Stop-and-turn obstacle avoidance.
//!
//! The rover cruises forward until the ranger reports something inside
//! `stop_distance`, stops, then turns left by `turn_angle`. When the turn is
//! complete it resumes cruising if the way ahead is clear past
//! `clear_distance`; otherwise it turns the other way, alternating
//! left/right until `max_turn_attempts` is exhausted and it gives up
//! (blocked, stationary).
//!
//! Successive attempts within one episode fan out around the heading the
//! rover stopped at: +a, -a, +2a, -2a, ... for `turn_angle` a.
//!
//! With [`TurnStyle::Shuffle`] the turn is a multi-point manoeuvre: short
//! reversing and forward legs with the wheels cut opposite ways, so the nose
//! swings while the body stays near the stop point. [`TurnStyle::Arc`]
//! instead drives one forward arc at half throttle.

use crate::hardware::{DriveCommand, STEER_LIMIT_DEG};
use crate::sensing::UltrasonicReading;
use crate::world::{angle_diff, normalize_angle, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TurnStyle {
    /// One forward arc at half throttle, full steer.
    Arc,
    /// Alternating reverse/forward legs at half throttle, full steer.
    #[default]
    Shuffle,
}

impl TurnStyle {
    pub fn parse(s: &str) -> Option<TurnStyle> {
        match s {
            "arc" => Some(TurnStyle::Arc),
            "shuffle" => Some(TurnStyle::Shuffle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutonomyParams {
    pub stop_distance: f64,
    pub clear_distance: f64,
    /// Degrees.
    pub turn_angle: f64,
    pub cruise_throttle: i8,
    pub max_turn_attempts: u32,
    /// Degrees; a turn is complete once the heading is this close to target.
    pub turn_tolerance: f64,
    pub turn_style: TurnStyle,
    /// Degrees of heading change per shuffle leg.
    pub shuffle_leg: f64,
    /// A forward shuffle leg is cut short when the ranger reads closer than
    /// this.
    pub guard_distance: f64,
}

impl Default for AutonomyParams {
    fn default() -> Self {
        Self {
            stop_distance: 0.50,
            clear_distance: 0.80,
            turn_angle: 45.0,
            cruise_throttle: 60,
            max_turn_attempts: 4,
            turn_tolerance: 3.0,
            turn_style: TurnStyle::Shuffle,
            shuffle_leg: 10.0,
            guard_distance: 0.35,
        }
    }
}

impl AutonomyParams {
    pub fn validate(&self, sensor_max_range: f64) -> Result<(), String> {
        if !(self.stop_distance > 0.0
            && self.stop_distance < self.clear_distance
            && self.clear_distance <= sensor_max_range)
        {
            return Err("need 0 < stop_distance < clear_distance <= sensor max_range".into());
        }
        if !(self.turn_angle > 0.0 && self.turn_angle <= 180.0) {
            return Err("turn_angle must be in (0, 180]".into());
        }
        if !(1..=100).contains(&self.cruise_throttle) {
            return Err("cruise_throttle must be in (0, 100]".into());
        }
        if !(self.turn_tolerance > 0.0 && self.turn_tolerance < self.turn_angle) {
            return Err("turn_tolerance must be positive and below turn_angle".into());
        }
        if !(self.shuffle_leg > 0.0 && self.shuffle_leg <= 180.0) {
            return Err("shuffle_leg must be in (0, 180]".into());
        }
        if !(self.guard_distance >= 0.0 && self.guard_distance < self.clear_distance) {
            return Err("guard_distance must be in [0, clear_distance)".into());
        }
        Ok(())
    }
}

/// Flowchart phase. Discriminants are the wire encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Phase {
    Forward = 0,
    AvoidStop = 1,
    TurnLeft = 2,
    TurnRight = 3,
}

impl Phase {
    pub fn is_turn(self) -> bool {
        matches!(self, Phase::TurnLeft | Phase::TurnRight)
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Forward => "FORWARD",
            Phase::AvoidStop => "AVOID_STOP",
            Phase::TurnLeft => "TURN_LEFT",
            Phase::TurnRight => "TURN_RIGHT",
        }
    }
}

/// One leg of a shuffle turn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub reversing: bool,
    /// Heading when the leg began, radians.
    pub start: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutonomyState {
    pub phase: Phase,
    /// Radians; present exactly in the turn phases.
    pub heading_target: Option<f64>,
    pub attempts: u32,
    /// Heading at the stop that opened the current episode.
    pub origin: Option<f64>,
    pub leg: Option<Leg>,
    /// Set when the turn budget ran out; the rover then holds still in
    /// `AvoidStop` until the state is reset.
    pub blocked: bool,
}

impl Default for AutonomyState {
    fn default() -> Self {
        Self {
            phase: Phase::Forward,
            heading_target: None,
            attempts: 0,
            origin: None,
            leg: None,
            blocked: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutonomyStep {
    pub state: AutonomyState,
    pub command: DriveCommand,
    /// True only on the step that gives up.
    pub became_blocked: bool,
}

/// Heading for turn attempt `attempt` (1-based) of an episode that began at
/// `origin`.
pub fn turn_target(origin: f64, attempt: u32, params: &AutonomyParams) -> f64 {
    let magnitude = f64::from(attempt.div_ceil(2)) * params.turn_angle.to_radians();
    let sign = if attempt % 2 == 1 { 1.0 } else { -1.0 };
    normalize_angle(origin + sign * magnitude)
}

fn turn_drive(phase: Phase, reversing: bool, params: &AutonomyParams) -> DriveCommand {
    let steer = STEER_LIMIT_DEG as i8;
    let throttle = params.cruise_throttle / 2;
    let steer = if (phase == Phase::TurnLeft) != reversing { steer } else { -steer };
    let throttle = if reversing { -throttle } else { throttle };
    DriveCommand { throttle, steer }
}

/// Advances the leg bookkeeping for one turning tick.
fn next_leg(leg: Option<Leg>, reading: &UltrasonicReading, pose: &Pose, params: &AutonomyParams) -> Option<Leg> {
    if params.turn_style == TurnStyle::Arc {
        return None;
    }
    let leg = leg.unwrap_or(Leg {
        reversing: true,
        start: pose.heading,
    });
    let swung = angle_diff(pose.heading, leg.start).abs();
    let cut_short = !leg.reversing && reading.is_closer_than(params.guard_distance);
    if swung >= params.shuffle_leg.to_radians() || cut_short {
        Some(Leg {
            reversing: !leg.reversing,
            start: pose.heading,
        })
    } else {
        Some(leg)
    }
}

fn turning(state: AutonomyState, reading: &UltrasonicReading, pose: &Pose, params: &AutonomyParams) -> AutonomyStep {
    let leg = next_leg(state.leg, reading, pose, params);
    let reversing = leg.is_some_and(|l| l.reversing);
    AutonomyStep {
        state: AutonomyState { leg, ..state },
        command: turn_drive(state.phase, reversing, params),
        became_blocked: false,
    }
}

pub fn step_autonomy(
    state: AutonomyState,
    reading: &UltrasonicReading,
    pose: &Pose,
    params: &AutonomyParams,
) -> AutonomyStep {
    let cruise = AutonomyStep {
        state: AutonomyState::default(),
        command: DriveCommand {
            throttle: params.cruise_throttle,
            steer: 0,
        },
        became_blocked: false,
    };
    let hold = |state| AutonomyStep {
        state,
        command: DriveCommand::STOP,
        became_blocked: false,
    };

    match state.phase {
        Phase::Forward if reading.is_closer_than(params.stop_distance) => hold(AutonomyState {
            phase: Phase::AvoidStop,
            ..AutonomyState::default()
        }),
        Phase::Forward => cruise,
        Phase::AvoidStop if state.blocked => hold(state),
        Phase::AvoidStop => {
            let leg = next_leg(None, reading, pose, params);
            let first = turn_drive(Phase::TurnLeft, leg.is_some_and(|l| l.reversing), params);
            AutonomyStep {
                state: AutonomyState {
                    phase: Phase::TurnLeft,
                    heading_target: Some(turn_target(pose.heading, 1, params)),
                    attempts: 1,
                    origin: Some(pose.heading),
                    leg,
                    blocked: false,
                },
                // Steering swings over while the wheels are still stopped.
                command: DriveCommand {
                    throttle: 0,
                    steer: first.steer,
                },
                became_blocked: false,
            }
        }
        Phase::TurnLeft | Phase::TurnRight => {
            let origin = state.origin.unwrap_or(pose.heading);
            let target = state
                .heading_target
                .unwrap_or_else(|| turn_target(origin, state.attempts.max(1), params));
            let state = AutonomyState {
                heading_target: Some(target),
                origin: Some(origin),
                ..state
            };
            let reached =
                angle_diff(pose.heading, target).abs() <= params.turn_tolerance.to_radians();
            if !reached {
                return turning(state, reading, pose, params);
            }
            if !reading.is_closer_than(params.clear_distance) {
                return cruise;
            }
            if state.attempts >= params.max_turn_attempts {
                return AutonomyStep {
                    state: AutonomyState {
                        phase: Phase::AvoidStop,
                        attempts: state.attempts,
                        blocked: true,
                        ..AutonomyState::default()
                    },
                    command: DriveCommand::STOP,
                    became_blocked: true,
                };
            }
            let attempts = state.attempts + 1;
            let next = if state.phase == Phase::TurnLeft {
                Phase::TurnRight
            } else {
                Phase::TurnLeft
            };
            // The next attempt starts on the opposite leg so the shuffle
            // stays centred on the stop point.
            let leg = state.leg.map(|l| Leg {
                reversing: !l.reversing,
                start: pose.heading,
            });
            turning(
                AutonomyState {
                    phase: next,
                    heading_target: Some(turn_target(origin, attempts, params)),
                    attempts,
                    origin: Some(origin),
                    leg,
                    blocked: false,
                },
                reading,
                pose,
                params,
            )
        }
    }
}

/// Who is in control of the wheels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Mode {
    Manual = 0,
    Auto = 1,
}

impl Mode {
    pub fn from_wire(v: u8) -> Option<Mode> {
        match v {
            0 => Some(Mode::Manual),
            1 => Some(Mode::Auto),
            _ => None,
        }
    }
}

/// Picks the command that reaches the motors. `operator` must already be
/// `None` if the last operator drive command is older than the deadman
/// timeout.
pub fn arbitrate(
    mode: Mode,
    operator: Option<DriveCommand>,
    autonomy: DriveCommand,
) -> DriveCommand {
    match mode {
        Mode::Manual => operator.unwrap_or(DriveCommand::STOP),
        Mode::Auto => autonomy,
    }
}
