//! The fixed-tick simulation loop.
//!
//! [`Simulation::tick`] runs one step in a fixed order:
//!
//! 1. drain queued operator commands (mode, camera and record act at once;
//!    the newest drive command is latched),
//! 2. read the ultrasonic ranger,
//! 3. step the autonomy state machine when in AUTO,
//! 4. arbitrate between operator and autonomy,
//! 5. slew the actuators,
//! 6. integrate the kinematics,
//! 7. check for collisions,
//! 8. drain the battery and update the camera rail,
//! 9. emit telemetry,
//! 10. render and emit a video frame,
//! 11. append everything emitted to the session log.
//!
//! Time is simulated: nothing here reads a clock, so identical inputs give
//! identical output bytes.

use std::collections::VecDeque;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use thiserror::Error;

use crate::autonomy::{arbitrate, step_autonomy, AutonomyState, Mode};
use crate::config::SimConfig;
use crate::hardware::{
    apply_drive_command, regulate, step_battery, Battery, DriveCommand, DriveState, PowerRail,
};
use crate::protocol::{
    event, Message, Telemetry, RANGE_OUT_OF_RANGE, RECORD_SNAPSHOT, RECORD_START, RECORD_STOP,
    TYPE_CMD_DRIVE, TYPE_CMD_MODE, TYPE_CMD_RECORD,
};
use crate::script::ScriptedCommand;
use crate::sensing::{
    pan_camera, read_ultrasonic, render_frame, round_half_up, sensor_rng, wire_pan, Frame,
    GimbalState, SensorRng, UltrasonicReading,
};
use crate::session::{SessionWriter, LOG_EXTENSION};
use crate::world::{collision_check, step_kinematics, Pose, World};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("start pose ({x:.3}, {y:.3}) collides with the world")]
    StartCollides { x: f64, y: f64 },
}

/// An open session log.
struct Recorder {
    path: PathBuf,
    writer: SessionWriter<BufWriter<File>>,
}

pub struct Simulation {
    cfg: SimConfig,
    world: World,
    tick: u64,
    pose: Pose,
    drive: DriveState,
    battery: Battery,
    rail: PowerRail,
    gimbal: GimbalState,
    mode: Mode,
    autonomy: AutonomyState,
    rng: SensorRng,
    inbox: VecDeque<Message>,
    /// Latest operator drive command and the tick it arrived on.
    latched_drive: Option<(DriveCommand, u64)>,
    last_reading: Option<UltrasonicReading>,
    last_frame: Option<Frame>,
    recorder: Option<Recorder>,
    /// Close the log once the current tick has been appended.
    stop_pending: bool,
    finished_logs: Vec<PathBuf>,
    pending: Vec<Message>,
}

impl Simulation {
    pub fn new(cfg: SimConfig, world: World) -> Result<Self, SimError> {
        cfg.validate()?;
        let b = world.bounds;
        let pose = Pose::new(
            cfg.start.x.unwrap_or(b.x + b.w / 2.0),
            cfg.start.y.unwrap_or(b.y + b.h / 2.0),
            cfg.start.heading.to_radians(),
        );
        if collision_check(&world, &pose, cfg.chassis.body_radius) {
            return Err(SimError::StartCollides {
                x: pose.x,
                y: pose.y,
            });
        }
        let battery = Battery::new(
            cfg.battery_capacity,
            cfg.battery_initial.unwrap_or(cfg.battery_capacity),
            cfg.pack,
        );
        let rail = regulate(battery.voltage, &cfg.buck);
        let mut sim = Self {
            rng: sensor_rng(cfg.seed),
            mode: cfg.initial_mode,
            cfg,
            world,
            tick: 0,
            pose,
            drive: DriveState::default(),
            battery,
            rail,
            gimbal: GimbalState::default(),
            autonomy: AutonomyState::default(),
            inbox: VecDeque::new(),
            latched_drive: None,
            last_reading: None,
            last_frame: None,
            recorder: None,
            stop_pending: false,
            finished_logs: Vec::new(),
            pending: Vec::new(),
        };
        if sim.cfg.record_on_start {
            let mut out = Vec::new();
            sim.start_recording(&mut out);
            sim.pending = out;
        }
        Ok(sim)
    }

    /// Queues an operator command for the next tick.
    pub fn enqueue(&mut self, msg: Message) {
        self.inbox.push_back(msg);
    }

    /// Index of the tick that the next call to [`tick`](Self::tick) runs.
    pub fn current_tick(&self) -> u64 {
        self.tick
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn drive(&self) -> DriveState {
        self.drive
    }

    pub fn battery(&self) -> Battery {
        self.battery
    }

    pub fn rail(&self) -> PowerRail {
        self.rail
    }

    pub fn gimbal(&self) -> GimbalState {
        self.gimbal
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn autonomy(&self) -> AutonomyState {
        self.autonomy
    }

    pub fn last_reading(&self) -> Option<UltrasonicReading> {
        self.last_reading
    }

    pub fn last_frame(&self) -> Option<&Frame> {
        self.last_frame.as_ref()
    }

    pub fn is_recording(&self) -> bool {
        self.recorder.is_some()
    }

    /// Path of the log currently being written.
    pub fn recording_path(&self) -> Option<&PathBuf> {
        self.recorder.as_ref().map(|r| &r.path)
    }

    /// Logs closed so far, oldest first.
    pub fn finished_logs(&self) -> &[PathBuf] {
        &self.finished_logs
    }

    /// Advances one tick and returns the messages to broadcast.
    pub fn tick(&mut self) -> Vec<Message> {
        let tick = self.tick;
        let dt = self.cfg.dt();
        let mut out = std::mem::take(&mut self.pending);

        // 1. operator commands
        while let Some(msg) = self.inbox.pop_front() {
            self.handle_command(msg, &mut out);
        }

        // 2. ranger
        let reading = read_ultrasonic(
            &self.world,
            &self.pose,
            &self.cfg.chassis,
            &self.cfg.ultrasonic,
            tick,
            &mut self.rng,
        );
        self.last_reading = Some(reading);

        // 3. autonomy
        let autonomy_cmd = if self.mode == Mode::Auto {
            let step = step_autonomy(self.autonomy, &reading, &self.pose, &self.cfg.autonomy);
            if step.became_blocked {
                let attempts = step.state.attempts.min(u32::from(u8::MAX)) as u8;
                out.push(Message::event(tick, event::BLOCKED, attempts));
            }
            self.autonomy = step.state;
            step.command
        } else {
            DriveCommand::STOP
        };

        // 4. arbitration with deadman
        let timeout = self.cfg.command_timeout_ticks();
        let operator = self
            .latched_drive
            .filter(|&(_, at)| tick - at <= timeout)
            .map(|(cmd, _)| cmd);
        let cmd = arbitrate(self.mode, operator, autonomy_cmd);

        // 5. actuators
        self.drive = apply_drive_command(cmd, self.drive, &self.cfg.chassis, &self.cfg.slew, dt);

        // 6-7. kinematics and collision
        let next = step_kinematics(self.pose, self.drive, &self.cfg.chassis, dt);
        if collision_check(&self.world, &next, self.cfg.chassis.body_radius) {
            self.drive.speed = 0.0;
            out.push(Message::event(tick, event::COLLISION, 0));
        } else {
            self.pose = next;
        }

        // 8. power
        let load = self.cfg.load.current(
            self.drive.speed,
            self.cfg.chassis.max_speed,
            !self.rail.brownout,
        );
        self.battery = step_battery(self.battery, load, dt);
        let rail = regulate(self.battery.voltage, &self.cfg.buck);
        if rail.brownout && !self.rail.brownout {
            out.push(Message::event(tick, event::BROWNOUT, 0));
        }
        self.rail = rail;

        // 9. telemetry
        if tick.is_multiple_of(u64::from(self.cfg.telemetry_every)) {
            out.push(Message::Telemetry(self.telemetry(tick, &reading)));
        }

        // 10. video
        if tick.is_multiple_of(u64::from(self.cfg.frame_every)) && !self.rail.brownout {
            let frame = render_frame(&self.world, &self.pose, &self.gimbal, tick, &self.cfg.camera);
            out.push(Message::VideoFrame {
                tick,
                pan: frame.pan,
                width: frame.width,
                height: frame.height,
                pixels: frame.pixels.clone(),
            });
            self.last_frame = Some(frame);
        }

        // 11. session log
        self.record(&out, tick);
        if std::mem::take(&mut self.stop_pending) {
            self.stop_recording();
        }

        self.tick += 1;
        out
    }

    fn telemetry(&self, tick: u64, reading: &UltrasonicReading) -> Telemetry {
        let range_cm = reading.range.map_or(RANGE_OUT_OF_RANGE, |r| {
            round_half_up(r * 100.0).min(f64::from(RANGE_OUT_OF_RANGE - 1)) as u16
        });
        Telemetry {
            tick,
            x: self.pose.x as f32,
            y: self.pose.y as f32,
            heading: self.pose.heading as f32,
            speed: self.drive.speed as f32,
            range_cm,
            battery_mv: round_half_up(self.battery.voltage * 1000.0).min(f64::from(u16::MAX)) as u16,
            mode: self.mode as u8,
            phase: self.autonomy.phase as u8,
            pan: wire_pan(self.gimbal.pan),
            tilt: round_half_up(self.gimbal.tilt) as i8,
        }
    }

    fn handle_command(&mut self, msg: Message, out: &mut Vec<Message>) {
        let tick = self.tick;
        match msg {
            Message::CmdDrive { throttle, steer } => {
                let (cmd, clamped) = DriveCommand::clamped(throttle.into(), steer.into());
                if clamped {
                    out.push(Message::event(tick, event::CMD_CLAMPED, TYPE_CMD_DRIVE));
                }
                self.latched_drive = Some((cmd, tick));
            }
            Message::CmdCamera {
                delta_pan,
                delta_tilt,
            } => {
                self.gimbal = pan_camera(self.gimbal, delta_pan.into(), delta_tilt.into());
            }
            Message::CmdMode { mode } => match Mode::from_wire(mode) {
                Some(mode) => {
                    if mode != self.mode {
                        self.autonomy = AutonomyState::default();
                        out.push(Message::event(tick, event::MODE_CHANGED, mode as u8));
                    }
                    self.mode = mode;
                }
                None => out.push(Message::event(tick, event::CMD_REJECTED, TYPE_CMD_MODE)),
            },
            Message::CmdRecord { action } => match action {
                RECORD_START => {
                    if self.stop_pending {
                        // Stop then start within one tick: hand over at once.
                        self.stop_pending = false;
                        self.stop_recording();
                    }
                    if self.recorder.is_none() {
                        self.start_recording(out);
                    }
                }
                RECORD_STOP => {
                    if self.recorder.is_some() && !self.stop_pending {
                        self.stop_pending = true;
                        out.push(Message::event(tick, event::RECORD_STOPPED, 0));
                    }
                }
                RECORD_SNAPSHOT => self.snapshot(out),
                _ => out.push(Message::event(tick, event::CMD_REJECTED, TYPE_CMD_RECORD)),
            },
            other => out.push(Message::event(tick, event::CMD_REJECTED, other.type_code())),
        }
    }

    fn start_recording(&mut self, out: &mut Vec<Message>) {
        let tick = self.tick;
        let Some(dir) = self.cfg.record_dir.clone() else {
            out.push(Message::event(tick, event::RECORD_ERROR, RECORD_START));
            return;
        };
        let path = dir.join(format!("session_{tick}.{LOG_EXTENSION}"));
        let opened = fs::create_dir_all(&dir)
            .and_then(|_| File::create(&path))
            .and_then(|f| SessionWriter::new(BufWriter::new(f)));
        match opened {
            Ok(writer) => {
                self.recorder = Some(Recorder { path, writer });
                out.push(Message::event(tick, event::RECORD_STARTED, 0));
            }
            Err(_) => out.push(Message::event(tick, event::RECORD_ERROR, RECORD_START)),
        }
    }

    /// Closes the current session log, if any. Returns its path.
    pub fn stop_recording(&mut self) -> Option<PathBuf> {
        let rec = self.recorder.take()?;
        // A failed flush leaves a truncated log; readers report the offset.
        let _ = rec.writer.finish();
        self.finished_logs.push(rec.path.clone());
        Some(rec.path)
    }

    fn record(&mut self, out: &[Message], tick: u64) {
        let Some(rec) = self.recorder.as_mut() else {
            return;
        };
        let failed = out.iter().any(|m| rec.writer.append(m).is_err());
        if failed {
            self.stop_recording();
            let err = Message::event(tick, event::RECORD_ERROR, RECORD_START);
            self.pending.push(err);
        }
    }

    /// Writes the latest rendered frame as `snap_<frame tick>.pgm`.
    fn snapshot(&mut self, out: &mut Vec<Message>) {
        let tick = self.tick;
        let fail = Message::event(tick, event::RECORD_ERROR, RECORD_SNAPSHOT);
        let (Some(dir), Some(frame)) = (self.cfg.record_dir.as_ref(), self.last_frame.as_ref())
        else {
            out.push(fail);
            return;
        };
        if self.rail.brownout {
            out.push(fail);
            return;
        }
        let path = dir.join(format!("snap_{}.pgm", frame.tick));
        match fs::create_dir_all(dir).and_then(|_| fs::write(&path, frame.to_pgm())) {
            Ok(()) => out.push(Message::event(tick, event::SNAPSHOT, 0)),
            Err(_) => out.push(fail),
        }
    }

    /// Runs `ticks` ticks, injecting each scripted command just before the
    /// tick it is stamped with. `sink` sees every tick's output.
    pub fn run_scripted(
        &mut self,
        script: &[ScriptedCommand],
        ticks: u64,
        mut sink: impl FnMut(&[Message]),
    ) {
        let mut next = script
            .iter()
            .position(|c| c.tick >= self.tick)
            .unwrap_or(script.len());
        for _ in 0..ticks {
            while let Some(cmd) = script.get(next).filter(|c| c.tick <= self.tick) {
                self.enqueue(cmd.message.clone());
                next += 1;
            }
            let out = self.tick();
            sink(&out);
        }
    }
}

impl Drop for Simulation {
    fn drop(&mut self) {
        self.stop_recording();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autonomy::Phase;

    fn empty_sim(mode: Mode) -> Simulation {
        let cfg = SimConfig {
            initial_mode: mode,
            ..SimConfig::default()
        };
        Simulation::new(cfg, World::empty(20.0, 20.0).unwrap()).unwrap()
    }

    fn count(out: &[Message], pred: impl Fn(&Message) -> bool) -> usize {
        out.iter().filter(|m| pred(m)).count()
    }

    #[test]
    fn auto_cruise_in_empty_world() {
        let mut sim = empty_sim(Mode::Auto);
        let start = sim.pose();
        let mut all = Vec::new();
        for _ in 0..100 {
            all.extend(sim.tick());
        }
        let telemetry = count(&all, |m| matches!(m, Message::Telemetry(_)));
        let video = count(&all, |m| matches!(m, Message::VideoFrame { .. }));
        assert_eq!((telemetry, video), (100, 20));

        // Closed form: speed ramps 0.02 m/s per tick to 0.3 m/s, each tick
        // moves speed * dt.
        let expected: f64 = (1..=100).map(|k| (0.02 * k as f64).min(0.3) * 0.02).sum();
        let moved = sim.pose().x - start.x;
        assert!((moved - expected).abs() < 1e-9, "{moved} vs {expected}");
        assert_eq!(sim.pose().y, start.y);
        assert_eq!(sim.autonomy().phase, Phase::Forward);
    }

    #[test]
    fn manual_without_operator_stays_put() {
        let mut sim = empty_sim(Mode::Manual);
        for _ in 0..50 {
            for m in sim.tick() {
                if let Message::Telemetry(t) = m {
                    assert_eq!(t.speed, 0.0);
                }
            }
        }
    }

    #[test]
    fn deadman_releases_after_timeout() {
        let mut sim = empty_sim(Mode::Manual);
        sim.enqueue(Message::CmdDrive { throttle: 100, steer: 0 });
        for _ in 0..=25 {
            sim.tick();
        }
        // The command from tick 0 is still valid at tick 25.
        assert!(sim.drive().speed > 0.4);
        for _ in 0..40 {
            sim.tick();
        }
        assert_eq!(sim.drive().speed, 0.0);
    }

    #[test]
    fn clamped_and_rejected_commands_emit_events() {
        let mut sim = empty_sim(Mode::Manual);
        sim.enqueue(Message::CmdDrive { throttle: 120, steer: 0 });
        sim.enqueue(Message::CmdMode { mode: 7 });
        sim.enqueue(Message::CmdRecord { action: 9 });
        let out = sim.tick();
        let codes: Vec<(u8, u8)> = out
            .iter()
            .filter_map(|m| match m {
                Message::Event { code, detail, .. } => Some((*code, *detail)),
                _ => None,
            })
            .collect();
        assert_eq!(
            codes,
            vec![
                (event::CMD_CLAMPED, TYPE_CMD_DRIVE),
                (event::CMD_REJECTED, TYPE_CMD_MODE),
                (event::CMD_REJECTED, TYPE_CMD_RECORD),
            ]
        );
    }

    #[test]
    fn camera_commands_move_gimbal() {
        let mut sim = empty_sim(Mode::Auto);
        sim.enqueue(Message::CmdCamera { delta_pan: -90, delta_tilt: 40 });
        let out = sim.tick();
        assert_eq!(sim.gimbal(), GimbalState { pan: 270.0, tilt: 30.0 });
        let t = out
            .iter()
            .find_map(|m| match m {
                Message::Telemetry(t) => Some(t.clone()),
                _ => None,
            })
            .unwrap();
        assert_eq!((t.pan, t.tilt), (270, 30));
    }

    #[test]
    fn start_inside_obstacle_fails_fast() {
        let world = crate::world::load_world("bounds 10 10\nrect 4 4 2 2\n").unwrap();
        assert!(matches!(
            Simulation::new(SimConfig::default(), world),
            Err(SimError::StartCollides { .. })
        ));
    }

    #[test]
    fn snapshot_without_frame_or_dir_errors() {
        let mut sim = empty_sim(Mode::Manual);
        sim.enqueue(Message::CmdRecord { action: RECORD_SNAPSHOT });
        let out = sim.tick();
        assert!(out.contains(&Message::event(0, event::RECORD_ERROR, RECORD_SNAPSHOT)));
    }

    #[test]
    fn collision_stops_the_rover() {
        let world = crate::world::load_world("bounds 4 4\n").unwrap();
        let cfg = SimConfig {
            start: crate::config::StartPose {
                x: Some(3.7),
                y: Some(2.0),
                heading: 0.0,
            },
            ..SimConfig::default()
        };
        let mut sim = Simulation::new(cfg, world).unwrap();
        let mut collisions = 0;
        for _ in 0..100 {
            sim.enqueue(Message::CmdDrive { throttle: 100, steer: 0 });
            let out = sim.tick();
            collisions += count(&out, |m| matches!(m, Message::Event { code: event::COLLISION, .. }));
            assert!(!collision_check(sim.world(), &sim.pose(), 0.12));
        }
        assert!(collisions > 0);
        assert!(sim.pose().x <= 3.88);
    }
}
