//! Connected consoles and their roles.
//!
//! The earliest connected console still online is the driver; everyone
//! else observes. Observers may pan the camera but their drive, mode and
//! record commands are answered with `CMD_REJECTED`. When the driver
//! leaves, the next oldest connection is promoted and told so.

use std::sync::Arc;

use rover_core::protocol::event;
use rover_core::Message;
use tracing::{debug, warn};

use crate::queue::{Outbox, Outgoing, Push};

pub type ClientId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Driver,
    Observer,
}

impl Role {
    fn wire(self) -> u8 {
        match self {
            Role::Driver => event::ROLE_DRIVER,
            Role::Observer => event::ROLE_OBSERVER,
        }
    }
}

struct Client {
    id: ClientId,
    outbox: Arc<Outbox>,
}

#[derive(Default)]
pub struct Hub {
    /// In connection order; index 0 drives.
    clients: Vec<Client>,
}

impl Hub {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.clients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty()
    }

    pub fn role(&self, id: ClientId) -> Option<Role> {
        let i = self.clients.iter().position(|c| c.id == id)?;
        Some(if i == 0 { Role::Driver } else { Role::Observer })
    }

    pub fn connect(&mut self, id: ClientId, outbox: Arc<Outbox>, tick: u64) -> Role {
        self.clients.push(Client { id, outbox });
        let role = self.role(id).expect("just added");
        self.send_to(id, &Message::event(tick, event::ROLE, role.wire()));
        debug!(id, ?role, "console connected");
        role
    }

    pub fn disconnect(&mut self, id: ClientId, tick: u64) {
        let Some(i) = self.clients.iter().position(|c| c.id == id) else {
            return;
        };
        let gone = self.clients.remove(i);
        gone.outbox.close();
        debug!(id, "console disconnected");
        if i == 0 {
            if let Some(next) = self.clients.first().map(|c| c.id) {
                self.send_to(next, &Message::event(tick, event::ROLE, event::ROLE_DRIVER));
                debug!(id = next, "promoted to driver");
            }
        }
    }

    /// Filters a command by the sender's role. Returns the command when it
    /// should reach the simulation.
    pub fn route(&mut self, id: ClientId, msg: Message, tick: u64) -> Option<Message> {
        let role = self.role(id)?;
        let allowed = role == Role::Driver || matches!(msg, Message::CmdCamera { .. });
        if allowed {
            Some(msg)
        } else {
            let code = msg.type_code();
            self.send_to(id, &Message::event(tick, event::CMD_REJECTED, code));
            None
        }
    }

    pub fn broadcast(&mut self, msgs: &[Message], tick: u64) {
        if self.clients.is_empty() {
            return;
        }
        let encoded: Vec<Outgoing> = msgs
            .iter()
            .filter_map(|m| Outgoing::encode(m).ok())
            .collect();
        let mut slow = Vec::new();
        for c in &self.clients {
            for item in &encoded {
                if c.outbox.push(item.clone()) == Push::Overflow {
                    slow.push(c.id);
                    break;
                }
            }
        }
        for id in slow {
            warn!(id, "console cannot keep up with telemetry; closing");
            self.disconnect(id, tick);
        }
    }

    fn send_to(&mut self, id: ClientId, msg: &Message) {
        let Some(c) = self.clients.iter().find(|c| c.id == id) else {
            return;
        };
        let Ok(item) = Outgoing::encode(msg) else {
            return;
        };
        if c.outbox.push(item) == Push::Overflow {
            self.disconnect(id, msg.tick().unwrap_or(0));
        }
    }

    pub fn close_all(&mut self) {
        for c in self.clients.drain(..) {
            c.outbox.close();
        }
    }
}
