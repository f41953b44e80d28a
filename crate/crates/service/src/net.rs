//! Network endpoints: raw TCP, WebSocket and the small HTTP surface.
//!
//! Both transports carry the same bytes. TCP is a plain stream of wire
//! frames; on the WebSocket every binary message holds exactly one frame.
//! A frame that fails to decode, or a rover-to-console message arriving
//! from a console, closes that connection and nothing else.

use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use rover_core::session::LOG_EXTENSION;
use rover_core::{decode, Decoded, Message, StreamDecoder};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tower_http::services::ServeDir;
use tracing::{debug, info};

use crate::hub::ClientId;
use crate::queue::{Outbox, Outgoing, Push};
use crate::runner::Inbound;

/// A recorded session served in place of the live simulation.
#[derive(Debug)]
pub struct ReplayLog {
    /// Records grouped by tick, in order.
    ticks: Vec<(u64, Vec<Outgoing>)>,
    period: Duration,
}

impl ReplayLog {
    pub fn new(records: &[Message], tick_hz: u32) -> Self {
        let mut ticks: Vec<(u64, Vec<Outgoing>)> = Vec::new();
        for m in records {
            let tick = m.tick().unwrap_or(0);
            let Ok(item) = Outgoing::encode(m) else { continue };
            match ticks.last_mut() {
                Some((t, items)) if *t == tick => items.push(item),
                _ => ticks.push((tick, vec![item])),
            }
        }
        Self {
            ticks,
            period: Duration::from_secs_f64(1.0 / f64::from(tick_hz.max(1))),
        }
    }

    pub fn len(&self) -> usize {
        self.ticks.iter().map(|(_, items)| items.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    /// Plays the log into `outbox` at the recorded tick spacing, then
    /// closes it.
    async fn play(self: Arc<Self>, outbox: Arc<Outbox>) {
        let start = tokio::time::Instant::now();
        let first = self.ticks.first().map_or(0, |(t, _)| *t);
        for (tick, items) in &self.ticks {
            let offset = u32::try_from(tick - first).unwrap_or(u32::MAX);
            tokio::time::sleep_until(start + self.period * offset).await;
            for item in items {
                if outbox.push(item.clone()) == Push::Overflow {
                    outbox.close();
                    return;
                }
            }
            if outbox.is_closed() {
                return;
            }
        }
        outbox.close();
    }
}

#[derive(Debug, Clone)]
pub enum Feed {
    Live(mpsc::Sender<Inbound>),
    Replay(Arc<ReplayLog>),
}

#[derive(Debug, Clone)]
pub struct AppState {
    pub feed: Feed,
    pub record_dir: Option<PathBuf>,
    pub queue_capacity: usize,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(feed: Feed, record_dir: Option<PathBuf>, queue_capacity: usize) -> Self {
        Self {
            feed,
            record_dir,
            queue_capacity,
            next_id: Arc::new(AtomicU64::new(1)),
        }
    }

    fn next_id(&self) -> ClientId {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }
}

/// A console session: attaches an outbox to the feed and returns the
/// handle used to forward its commands.
struct Session {
    id: ClientId,
    outbox: Arc<Outbox>,
    inbound: Option<mpsc::Sender<Inbound>>,
}

impl Session {
    async fn open(state: &AppState) -> Option<Self> {
        let id = state.next_id();
        let outbox = Arc::new(Outbox::new(state.queue_capacity));
        let inbound = match &state.feed {
            Feed::Live(tx) => {
                tx.send(Inbound::Connect {
                    id,
                    outbox: outbox.clone(),
                })
                .await
                .ok()?;
                Some(tx.clone())
            }
            Feed::Replay(log) => {
                tokio::spawn(log.clone().play(outbox.clone()));
                None
            }
        };
        Some(Self { id, outbox, inbound })
    }

    /// Returns false when the connection must close.
    async fn command(&self, msg: Message) -> bool {
        if !msg.is_command() {
            debug!(id = self.id, "console sent a rover message; closing");
            return false;
        }
        match &self.inbound {
            Some(tx) => tx.send(Inbound::Command { id: self.id, msg }).await.is_ok(),
            // Replays ignore commands.
            None => true,
        }
    }

    async fn close(self) {
        self.outbox.close();
        if let Some(tx) = self.inbound {
            let _ = tx.send(Inbound::Disconnect { id: self.id }).await;
        }
    }
}

pub async fn serve_tcp(listener: TcpListener, state: AppState) -> io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        let _ = stream.set_nodelay(true);
        debug!(%peer, "tcp console connected");
        tokio::spawn(handle_tcp(stream, state.clone()));
    }
}

async fn handle_tcp(stream: TcpStream, state: AppState) {
    let Some(session) = Session::open(&state).await else {
        return;
    };
    let (mut rd, mut wr) = stream.into_split();
    let outbox = session.outbox.clone();
    let writer = async move {
        while let Some(batch) = outbox.next_batch().await {
            for item in batch {
                if wr.write_all(&item.bytes).await.is_err() {
                    return;
                }
            }
        }
        let _ = wr.shutdown().await;
    };
    let reader = async {
        let mut decoder = StreamDecoder::new();
        let mut buf = vec![0u8; 4096];
        loop {
            let n = match rd.read(&mut buf).await {
                Ok(0) | Err(_) => return,
                Ok(n) => n,
            };
            decoder.push(&buf[..n]);
            loop {
                match decoder.next_message() {
                    Ok(Some(msg)) => {
                        if !session.command(msg).await {
                            return;
                        }
                    }
                    Ok(None) => break,
                    Err(e) => {
                        debug!(id = session.id, error = %e, "bad frame on tcp; closing");
                        return;
                    }
                }
            }
        }
    };
    tokio::select! {
        _ = writer => {}
        _ = reader => {}
    }
    session.close().await;
}

pub fn router(state: AppState, console_dir: Option<&Path>) -> Router {
    let app = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/sessions", get(list_sessions))
        .route("/sessions/{name}", get(get_session));
    let app = match console_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(placeholder)),
    };
    app.with_state(state)
}

pub async fn serve_http(listener: TcpListener, app: Router) -> io::Result<()> {
    info!(addr = %listener.local_addr()?, "http and websocket listening");
    axum::serve(listener, app).await
}

async fn placeholder() -> Html<&'static str> {
    Html(
        "<!doctype html><title>rover</title>\
         <p>No console assets configured. Set <code>console_dir</code> or \
         connect a console to <code>/ws</code>.</p>",
    )
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| handle_ws(socket, state))
}

async fn handle_ws(socket: WebSocket, state: AppState) {
    let Some(session) = Session::open(&state).await else {
        return;
    };
    let (mut tx, mut rx) = socket.split();
    let outbox = session.outbox.clone();
    let writer = async move {
        while let Some(batch) = outbox.next_batch().await {
            for item in batch {
                if tx.send(WsMessage::Binary(item.bytes)).await.is_err() {
                    return;
                }
            }
        }
        let _ = tx.send(WsMessage::Close(None)).await;
    };
    let reader = async {
        while let Some(Ok(frame)) = rx.next().await {
            let bytes = match frame {
                WsMessage::Binary(b) => b,
                WsMessage::Close(_) => return,
                WsMessage::Ping(_) | WsMessage::Pong(_) => continue,
                WsMessage::Text(_) => {
                    debug!(id = session.id, "text message on websocket; closing");
                    return;
                }
            };
            match decode(&bytes) {
                Ok(Decoded::Message { message, consumed }) if consumed == bytes.len() => {
                    if !session.command(message).await {
                        return;
                    }
                }
                _ => {
                    debug!(id = session.id, "websocket message is not one whole frame; closing");
                    return;
                }
            }
        }
    };
    tokio::select! {
        _ = writer => {}
        _ = reader => {}
    }
    session.close().await;
}

/// Session log names in `dir`, sorted.
pub fn session_names(dir: &Path) -> io::Result<Vec<String>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_ok_and(|t| t.is_file()))
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| is_log_name(n))
        .collect();
    names.sort();
    Ok(names)
}

fn is_log_name(name: &str) -> bool {
    !name.starts_with('.')
        && !name.contains(['/', '\\'])
        && Path::new(name).extension().is_some_and(|e| e == LOG_EXTENSION)
}

async fn list_sessions(State(state): State<AppState>) -> Response {
    let Some(dir) = state.record_dir else {
        return String::new().into_response();
    };
    match tokio::task::spawn_blocking(move || session_names(&dir)).await {
        Ok(Ok(names)) => names.iter().map(|n| format!("{n}\n")).collect::<String>().into_response(),
        Ok(Err(e)) if e.kind() == io::ErrorKind::NotFound => String::new().into_response(),
        _ => StatusCode::INTERNAL_SERVER_ERROR.into_response(),
    }
}

async fn get_session(State(state): State<AppState>, UrlPath(name): UrlPath<String>) -> Response {
    let Some(dir) = state.record_dir.filter(|_| is_log_name(&name)) else {
        return StatusCode::NOT_FOUND.into_response();
    };
    match tokio::fs::read(dir.join(&name)).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/octet-stream")], Bytes::from(bytes)).into_response(),
        Err(e) if e.kind() == io::ErrorKind::NotFound => StatusCode::NOT_FOUND.into_response(),
        Err(_) => StatusCode::INTERNAL_SERVER_ERROR.into_response(),
    }
}
