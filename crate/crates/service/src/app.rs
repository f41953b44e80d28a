//! Wiring for the `run`, `replay` and `worldcheck` commands.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rover_core::script::{parse_script, ScriptedCommand};
use rover_core::session::read_log;
use rover_core::{load_world, parse_config, Message, ServiceConfig, Simulation, World};
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tracing::{info, warn};

use crate::net::{self, AppState, Feed, ReplayLog};
use crate::runner::{self, Inbound, RunSummary, RunnerOptions};

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub world: Option<PathBuf>,
    pub seed: Option<u64>,
    pub record: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<ServiceConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in config {}", path.display()))?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

pub fn load_world_file(path: &Path) -> Result<World> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading world {}", path.display()))?;
    load_world(&text).with_context(|| format!("in world {}", path.display()))
}

/// Loads the config and world and applies overrides. `--record` turns on
/// recording from the first tick.
pub fn prepare(config: &Path, overrides: &Overrides) -> Result<(ServiceConfig, World)> {
    let mut cfg = load_config(config)?;
    if let Some(w) = &overrides.world {
        cfg.world_path = Some(w.clone());
    }
    if let Some(seed) = overrides.seed {
        cfg.sim.seed = seed;
    }
    if let Some(dir) = &overrides.record {
        cfg.sim.record_dir = Some(dir.clone());
        cfg.sim.record_on_start = true;
    }
    cfg.validate()?;
    let Some(world_path) = cfg.world_path.clone() else {
        bail!("no world given: pass --world or set world_path in the config");
    };
    let world = load_world_file(&world_path)?;
    Ok((cfg, world))
}

pub fn load_script(path: &Path) -> Result<Vec<ScriptedCommand>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading script {}", path.display()))?;
    parse_script(&text).with_context(|| format!("in script {}", path.display()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadlessReport {
    pub ticks: u64,
    pub messages: u64,
    pub collisions: u64,
    pub logs: Vec<PathBuf>,
}

/// Runs without any network, as fast as possible. Without `ticks`, runs
/// until one tick past the last scripted command.
pub fn run_headless(
    cfg: &ServiceConfig,
    world: World,
    script: &[ScriptedCommand],
    ticks: Option<u64>,
) -> Result<HeadlessReport> {
    let ticks = ticks.unwrap_or_else(|| script.last().map_or(0, |c| c.tick + 1));
    let mut sim = Simulation::new(cfg.sim.clone(), world)?;
    let mut messages = 0u64;
    let mut collisions = 0u64;
    sim.run_scripted(script, ticks, |out| {
        messages += out.len() as u64;
        collisions += out
            .iter()
            .filter(|m| matches!(m, Message::Event { code: rover_core::protocol::event::COLLISION, .. }))
            .count() as u64;
    });
    sim.stop_recording();
    Ok(HeadlessReport {
        ticks,
        messages,
        collisions,
        logs: sim.finished_logs().to_vec(),
    })
}

async fn bind(addr: &str, what: &str) -> Result<TcpListener> {
    TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {what} listener on {addr}"))
}

/// A running networked rover.
pub struct Live {
    pub tcp_addr: SocketAddr,
    pub http_addr: SocketAddr,
    inbound: mpsc::Sender<Inbound>,
    sim: std::thread::JoinHandle<RunSummary>,
    servers: Vec<JoinHandle<std::io::Result<()>>>,
}

impl Live {
    /// Binds both listeners before the first tick so a busy port fails
    /// the start-up instead of a running rover.
    pub async fn start(cfg: &ServiceConfig, world: World, max_ticks: Option<u64>) -> Result<Self> {
        let sim = Simulation::new(cfg.sim.clone(), world)?;
        let tcp = bind(&cfg.listen_tcp, "tcp").await?;
        let http = bind(&cfg.listen_ws, "websocket").await?;
        let tcp_addr = tcp.local_addr()?;
        let http_addr = http.local_addr()?;

        let (tx, rx) = mpsc::channel(runner::INBOUND_CAPACITY);
        let state = AppState::new(Feed::Live(tx.clone()), cfg.sim.record_dir.clone(), cfg.queue_capacity);
        let app = net::router(state.clone(), cfg.console_dir.as_deref());
        let servers = vec![
            tokio::spawn(net::serve_tcp(tcp, state)),
            tokio::spawn(net::serve_http(http, app)),
        ];
        let sim = runner::spawn(sim, rx, RunnerOptions { max_ticks, paced: true });
        info!(%tcp_addr, %http_addr, "rover running");
        Ok(Self {
            tcp_addr,
            http_addr,
            inbound: tx,
            sim,
            servers,
        })
    }

    /// Asks the simulation thread to stop after the current tick.
    pub fn shutdown_handle(&self) -> mpsc::Sender<Inbound> {
        self.inbound.clone()
    }

    /// Waits for the simulation to finish, then stops the servers.
    pub async fn wait(self) -> Result<RunSummary> {
        let Self { inbound, sim, servers, .. } = self;
        drop(inbound);
        let summary = tokio::task::spawn_blocking(move || sim.join())
            .await?
            .map_err(|_| anyhow::anyhow!("simulation thread panicked"))?;
        for s in servers {
            s.abort();
        }
        Ok(summary)
    }
}

/// Serves a recorded session. Each console that connects gets the whole
/// log from the start at the recorded pacing.
pub struct ReplayServer {
    pub http_addr: SocketAddr,
    pub records: usize,
    server: JoinHandle<std::io::Result<()>>,
}

impl ReplayServer {
    pub async fn start(log: &Path, listen: &str, tick_hz: u32, queue_capacity: usize) -> Result<Self> {
        let records = read_log(log).with_context(|| format!("reading session log {}", log.display()))?;
        if records.is_empty() {
            warn!(log = %log.display(), "session log holds no records");
        }
        let replay = Arc::new(ReplayLog::new(&records, tick_hz));
        let dir = log.parent().map(Path::to_path_buf);
        let state = AppState::new(Feed::Replay(replay), dir, queue_capacity);
        let http = bind(listen, "websocket").await?;
        let http_addr = http.local_addr()?;
        let server = tokio::spawn(net::serve_http(http, net::router(state, None)));
        info!(%http_addr, records = records.len(), "replaying {}", log.display());
        Ok(Self {
            http_addr,
            records: records.len(),
            server,
        })
    }

    pub async fn wait(self) -> Result<()> {
        self.server.await??;
        Ok(())
    }

    pub fn stop(self) {
        self.server.abort();
    }
}
