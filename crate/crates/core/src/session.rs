//! Session logs: the `WOSLOG1\n` header followed by encoded wire frames
//! (telemetry, video and events only) in tick order.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::protocol::{self, DecodeError, Decoded, Message, HEADER_LEN};

pub const LOG_MAGIC: &[u8; 8] = b"WOSLOG1\n";
pub const LOG_EXTENSION: &str = "woslog";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("missing or corrupt log header at byte {offset}")]
    BadHeader { offset: u64 },
    #[error("record at byte {offset}: {reason}")]
    Decode { offset: u64, reason: DecodeError },
    #[error("record at byte {offset} is truncated")]
    Truncated { offset: u64 },
    #[error("record at byte {offset} is a command (type {type_code:#04x}), not a rover message")]
    NotARecord { offset: u64, type_code: u8 },
    #[error("record at byte {offset} goes back in time (tick {tick} after {previous})")]
    TickOrder { offset: u64, tick: u64, previous: u64 },
    #[error("message cannot be encoded: {0}")]
    Encode(#[from] protocol::EncodeError),
}

impl LogError {
    /// Byte offset of the offending record, when the error is positional.
    pub fn offset(&self) -> Option<u64> {
        match self {
            LogError::BadHeader { offset }
            | LogError::Decode { offset, .. }
            | LogError::Truncated { offset }
            | LogError::NotARecord { offset, .. }
            | LogError::TickOrder { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

/// Appends records to a log. Rejects commands and out-of-order ticks so
/// every file it produces reads back cleanly.
pub struct SessionWriter<W: Write> {
    inner: W,
    last_tick: Option<u64>,
    scratch: Vec<u8>,
    records: u64,
}

impl<W: Write> SessionWriter<W> {
    pub fn new(mut inner: W) -> io::Result<Self> {
        inner.write_all(LOG_MAGIC)?;
        Ok(Self {
            inner,
            last_tick: None,
            scratch: Vec::new(),
            records: 0,
        })
    }

    pub fn append(&mut self, msg: &Message) -> Result<(), LogError> {
        let Some(tick) = msg.tick() else {
            return Err(LogError::NotARecord {
                offset: 0,
                type_code: msg.type_code(),
            });
        };
        if let Some(previous) = self.last_tick.filter(|&p| tick < p) {
            return Err(LogError::TickOrder {
                offset: 0,
                tick,
                previous,
            });
        }
        self.scratch.clear();
        protocol::encode_into(msg, &mut self.scratch)?;
        self.inner.write_all(&self.scratch)?;
        self.last_tick = Some(tick);
        self.records += 1;
        Ok(())
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Streams records back out of a log.
pub struct SessionReader<R: Read> {
    inner: R,
    offset: u64,
    last_tick: Option<u64>,
    done: bool,
}

impl<R: Read> SessionReader<R> {
    pub fn new(mut inner: R) -> Result<Self, LogError> {
        let mut header = [0u8; LOG_MAGIC.len()];
        let got = read_full(&mut inner, &mut header)?;
        if let Some(bad) = (0..LOG_MAGIC.len()).find(|&i| i >= got || header[i] != LOG_MAGIC[i]) {
            return Err(LogError::BadHeader { offset: bad as u64 });
        }
        Ok(Self {
            inner,
            offset: LOG_MAGIC.len() as u64,
            last_tick: None,
            done: false,
        })
    }

    /// Byte offset of the next unread record.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn read_record(&mut self) -> Result<Option<Message>, LogError> {
        let offset = self.offset;
        let mut frame = vec![0u8; HEADER_LEN];
        match read_full(&mut self.inner, &mut frame)? {
            0 => return Ok(None),
            n if n < HEADER_LEN => {
                // Surface header corruption ahead of truncation.
                protocol::decode(&frame[..n]).map_err(|reason| LogError::Decode { offset, reason })?;
                return Err(LogError::Truncated { offset });
            }
            _ => {}
        }
        protocol::decode(&frame).map_err(|reason| LogError::Decode { offset, reason })?;
        let len = usize::from(u16::from_be_bytes([frame[3], frame[4]]));
        frame.resize(HEADER_LEN + len, 0);
        if read_full(&mut self.inner, &mut frame[HEADER_LEN..])? < len {
            return Err(LogError::Truncated { offset });
        }
        let message = match protocol::decode(&frame) {
            Ok(Decoded::Message { message, .. }) => message,
            Ok(Decoded::NeedMore) => return Err(LogError::Truncated { offset }),
            Err(reason) => return Err(LogError::Decode { offset, reason }),
        };
        let Some(tick) = message.tick() else {
            return Err(LogError::NotARecord {
                offset,
                type_code: message.type_code(),
            });
        };
        if let Some(previous) = self.last_tick.filter(|&p| tick < p) {
            return Err(LogError::TickOrder {
                offset,
                tick,
                previous,
            });
        }
        self.last_tick = Some(tick);
        self.offset += frame.len() as u64;
        Ok(Some(message))
    }
}

impl<R: Read> Iterator for SessionReader<R> {
    type Item = Result<Message, LogError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.read_record().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.done = true;
        }
        item
    }
}

/// Reads until `buf` is full or EOF; returns the number of bytes read.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

pub fn open_log(path: &Path) -> Result<SessionReader<BufReader<File>>, LogError> {
    SessionReader::new(BufReader::new(File::open(path)?))
}

/// Decodes a whole log held in memory.
pub fn read_log_bytes(bytes: &[u8]) -> Result<Vec<Message>, LogError> {
    SessionReader::new(bytes)?.collect()
}

pub fn read_log(path: &Path) -> Result<Vec<Message>, LogError> {
    open_log(path)?.collect()
}
