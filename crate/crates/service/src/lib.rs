//! The networked rover: a paced simulation thread, console transports
//! (raw TCP and WebSocket), session-log HTTP endpoints and a replay server.

pub mod app;
pub mod hub;
pub mod net;
pub mod queue;
pub mod runner;

pub use app::{HeadlessReport, Live, Overrides, ReplayServer};
pub use hub::{Hub, Role};
pub use queue::{OutboundQueue, Outbox, Outgoing, Push};
