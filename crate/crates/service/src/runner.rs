//! The simulation thread.
//!
//! One thread owns the [`Simulation`] and the [`Hub`]. Connection handlers
//! talk to it only through the inbound channel; it talks back only through
//! each connection's [`Outbox`]. Ticks are paced against the wall clock,
//! but nothing inside the simulation reads that clock.

use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rover_core::{Message, Simulation};
use tokio::sync::mpsc;
use tracing::{info, warn};

use crate::hub::{ClientId, Hub};
use crate::queue::Outbox;

pub const INBOUND_CAPACITY: usize = 1024;

#[derive(Debug)]
pub enum Inbound {
    Connect { id: ClientId, outbox: Arc<Outbox> },
    Disconnect { id: ClientId },
    Command { id: ClientId, msg: Message },
    Shutdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub ticks: u64,
    pub collisions: u64,
}

pub struct RunnerOptions {
    /// Stop after this many ticks.
    pub max_ticks: Option<u64>,
    /// Sleep between ticks to match `tick_hz`.
    pub paced: bool,
}

/// Starts the simulation thread. The returned handle yields the summary
/// once the thread stops, which happens on [`Inbound::Shutdown`], when
/// every sender is gone, or after `max_ticks`.
pub fn spawn(
    sim: Simulation,
    inbound: mpsc::Receiver<Inbound>,
    opts: RunnerOptions,
) -> thread::JoinHandle<RunSummary> {
    thread::Builder::new()
        .name("rover-sim".into())
        .spawn(move || run(sim, inbound, opts))
        .expect("spawn simulation thread")
}

fn run(mut sim: Simulation, mut inbound: mpsc::Receiver<Inbound>, opts: RunnerOptions) -> RunSummary {
    let period = Duration::from_secs_f64(sim.config().dt());
    let mut hub = Hub::new();
    let mut summary = RunSummary {
        ticks: 0,
        collisions: 0,
    };
    let mut deadline = Instant::now();
    'run: loop {
        if opts.max_ticks.is_some_and(|n| summary.ticks >= n) {
            break;
        }
        let tick = sim.current_tick();
        loop {
            match inbound.try_recv() {
                Ok(Inbound::Connect { id, outbox }) => {
                    hub.connect(id, outbox, tick);
                }
                Ok(Inbound::Disconnect { id }) => hub.disconnect(id, tick),
                Ok(Inbound::Command { id, msg }) => {
                    if let Some(msg) = hub.route(id, msg, tick) {
                        sim.enqueue(msg);
                    }
                }
                Ok(Inbound::Shutdown) => break 'run,
                Err(mpsc::error::TryRecvError::Empty) => break,
                Err(mpsc::error::TryRecvError::Disconnected) => break 'run,
            }
        }

        let out = sim.tick();
        summary.ticks += 1;
        summary.collisions += out
            .iter()
            .filter(|m| matches!(m, Message::Event { code: rover_core::protocol::event::COLLISION, .. }))
            .count() as u64;
        hub.broadcast(&out, tick);

        if opts.paced {
            deadline += period;
            let now = Instant::now();
            if deadline > now {
                thread::sleep(deadline - now);
            } else if now - deadline > period * 10 {
                warn!(behind_ms = (now - deadline).as_millis() as u64, "simulation running late");
                deadline = now;
            }
        }
    }
    hub.close_all();
    if let Some(path) = sim.stop_recording() {
        info!(path = %path.display(), "session log closed");
    }
    summary
}
