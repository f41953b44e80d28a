//! Bounded per-connection outbound queues.
//!
//! When a queue is full the oldest queued video frame is dropped to make
//! room. Telemetry and events are never dropped; if nothing droppable is
//! left the push fails and the caller closes the connection.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use bytes::Bytes;
use rover_core::protocol::{self, Message};
use tokio::sync::Notify;

/// An encoded message ready to be written to a socket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outgoing {
    pub bytes: Bytes,
    /// Video may be dropped under pressure.
    pub droppable: bool,
}

impl Outgoing {
    pub fn encode(msg: &Message) -> Result<Self, protocol::EncodeError> {
        Ok(Self {
            bytes: Bytes::from(protocol::encode(msg)?),
            droppable: matches!(msg, Message::VideoFrame { .. }),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Push {
    Queued,
    /// Queued after evicting an older video frame.
    Evicted,
    /// The incoming video frame itself was discarded.
    Discarded,
    /// Full of messages that may not be dropped.
    Overflow,
}

#[derive(Debug)]
pub struct OutboundQueue {
    items: VecDeque<Outgoing>,
    capacity: usize,
    dropped: u64,
}

impl OutboundQueue {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
            dropped: 0,
        }
    }

    pub fn push(&mut self, item: Outgoing) -> Push {
        if self.items.len() < self.capacity {
            self.items.push_back(item);
            return Push::Queued;
        }
        if let Some(i) = self.items.iter().position(|m| m.droppable) {
            self.items.remove(i);
            self.items.push_back(item);
            self.dropped += 1;
            return Push::Evicted;
        }
        if item.droppable {
            self.dropped += 1;
            return Push::Discarded;
        }
        Push::Overflow
    }

    pub fn pop(&mut self) -> Option<Outgoing> {
        self.items.pop_front()
    }

    pub fn drain(&mut self) -> Vec<Outgoing> {
        self.items.drain(..).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Video frames dropped so far.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

/// A queue shared between the simulation thread (producer) and one
/// connection's writer task (consumer).
#[derive(Debug)]
pub struct Outbox {
    queue: Mutex<OutboundQueue>,
    ready: Notify,
    closed: AtomicBool,
}

impl Outbox {
    pub fn new(capacity: usize) -> Self {
        Self {
            queue: Mutex::new(OutboundQueue::new(capacity)),
            ready: Notify::new(),
            closed: AtomicBool::new(false),
        }
    }

    /// Never blocks on the consumer.
    pub fn push(&self, item: Outgoing) -> Push {
        if self.is_closed() {
            return Push::Overflow;
        }
        let result = self.queue.lock().expect("outbox lock").push(item);
        self.ready.notify_one();
        result
    }

    pub fn close(&self) {
        self.closed.store(true, Ordering::Release);
        self.ready.notify_one();
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::Acquire)
    }

    pub fn dropped(&self) -> u64 {
        self.queue.lock().expect("outbox lock").dropped()
    }

    /// Waits for queued messages. Returns `None` once the outbox is closed
    /// and everything queued before the close has been handed out.
    pub async fn next_batch(&self) -> Option<Vec<Outgoing>> {
        loop {
            let batch = self.queue.lock().expect("outbox lock").drain();
            if !batch.is_empty() {
                return Some(batch);
            }
            if self.is_closed() {
                return None;
            }
            self.ready.notified().await;
        }
    }
}
