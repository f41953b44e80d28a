use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rover_service::app::{self, Overrides};
use rover_service::runner::Inbound;
use rover_service::{Live, ReplayServer};
use tracing::{error, info};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "rover", version, about = "Simulated wildlife-observation rover")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the rover, networked or headless.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// World file; overrides `world_path` from the config.
        #[arg(long)]
        world: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Record a session log into this directory from the first tick.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Run without networking, feeding commands from this script.
        #[arg(long)]
        headless_script: Option<PathBuf>,
        /// Stop after this many ticks.
        #[arg(long)]
        ticks: Option<u64>,
    },
    /// Serve a recorded session to consoles over WebSocket.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        listen_ws: String,
        /// Config to take `tick_hz` from.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Playback rate; overrides the config.
        #[arg(long)]
        tick_hz: Option<u32>,
    },
    /// Validate a world file.
    Worldcheck { file: PathBuf },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Worldcheck { file } => {
            let world = app::load_world_file(&file)?;
            println!(
                "ok: {} x {} m, {} obstacles",
                world.bounds.w,
                world.bounds.h,
                world.obstacles.len()
            );
            Ok(())
        }
        Command::Run {
            config,
            world,
            seed,
            record,
            headless_script,
            ticks,
        } => {
            let overrides = Overrides { world, seed, record };
            let (cfg, world) = app::prepare(&config, &overrides)?;
            if let Some(script) = headless_script {
                let script = app::load_script(&script)?;
                let report = app::run_headless(&cfg, world, &script, ticks)?;
                println!(
                    "ticks={} messages={} collisions={}",
                    report.ticks, report.messages, report.collisions
                );
                for log in &report.logs {
                    println!("log={}", log.display());
                }
                return Ok(());
            }
            runtime()?.block_on(async {
                let live = Live::start(&cfg, world, ticks).await?;
                let stop = live.shutdown_handle();
                tokio::spawn(async move {
                    if tokio::signal::ctrl_c().await.is_ok() {
                        info!("shutting down");
                        let _ = stop.send(Inbound::Shutdown).await;
                    }
                });
                let summary = live.wait().await?;
                info!(ticks = summary.ticks, collisions = summary.collisions, "stopped");
                Ok(())
            })
        }
        Command::Replay {
            log,
            listen_ws,
            config,
            tick_hz,
        } => {
            let cfg = match &config {
                Some(path) => app::load_config(path)?,
                None => Default::default(),
            };
            let tick_hz = tick_hz.unwrap_or(cfg.sim.tick_hz);
            anyhow::ensure!(tick_hz > 0, "tick_hz must be positive");
            runtime()?.block_on(async {
                let server = ReplayServer::start(&log, &listen_ws, tick_hz, cfg.queue_capacity).await?;
                tokio::select! {
                    r = server.wait() => r,
                    _ = tokio::signal::ctrl_c() => Ok(()),
                }
            })
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")
}
