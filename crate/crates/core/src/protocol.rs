//! Binary wire format shared by the TCP transport, WebSocket transport,
//! session logs and the operator console.
//!
//! Every message travels in a frame:
//!
//! ```text
//! +-------+---------+------+-------------+-----------------+
//! | magic | version | type | length (BE) | payload         |
//! | 0xC3  | 0x01    | u8   | u16         | `length` bytes  |
//! +-------+---------+------+-------------+-----------------+
//! ```
//!
//! All payload integers are big-endian; floats are IEEE-754 binary32.

use thiserror::Error;

pub const MAGIC: u8 = 0xC3;
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 5;

pub const TYPE_CMD_DRIVE: u8 = 0x01;
pub const TYPE_CMD_CAMERA: u8 = 0x02;
pub const TYPE_CMD_MODE: u8 = 0x03;
pub const TYPE_CMD_RECORD: u8 = 0x04;
pub const TYPE_TELEMETRY: u8 = 0x10;
pub const TYPE_VIDEO_FRAME: u8 = 0x11;
pub const TYPE_EVENT: u8 = 0x12;

pub const TELEMETRY_LEN: usize = 33;
pub const EVENT_LEN: usize = 10;
/// tick + pan + width + height ahead of the pixels.
pub const VIDEO_HEADER_LEN: usize = 14;
pub const MAX_PAYLOAD: usize = u16::MAX as usize;
pub const MAX_VIDEO_PIXELS: usize = MAX_PAYLOAD - VIDEO_HEADER_LEN;

/// Range sentinel for "nothing within sensor range".
pub const RANGE_OUT_OF_RANGE: u16 = 0xFFFF;

pub const RECORD_STOP: u8 = 0;
pub const RECORD_START: u8 = 1;
pub const RECORD_SNAPSHOT: u8 = 2;

/// Event codes carried in [`Message::Event`].
pub mod event {
    pub const COLLISION: u8 = 1;
    pub const BROWNOUT: u8 = 2;
    pub const SNAPSHOT: u8 = 3;
    pub const RECORD_ERROR: u8 = 4;
    /// `detail` is the rejected message type.
    pub const CMD_REJECTED: u8 = 5;
    /// `detail` is the number of turn attempts made.
    pub const BLOCKED: u8 = 6;
    /// `detail` is the clamped message type.
    pub const CMD_CLAMPED: u8 = 7;
    /// `detail`: 0 = driver, 1 = observer. Sent to a single connection.
    pub const ROLE: u8 = 8;
    pub const RECORD_STARTED: u8 = 9;
    pub const RECORD_STOPPED: u8 = 10;
    /// `detail` is the new mode.
    pub const MODE_CHANGED: u8 = 11;

    pub const ROLE_DRIVER: u8 = 0;
    pub const ROLE_OBSERVER: u8 = 1;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Telemetry {
    pub tick: u64,
    pub x: f32,
    pub y: f32,
    pub heading: f32,
    pub speed: f32,
    /// Centimeters, [`RANGE_OUT_OF_RANGE`] when nothing was detected.
    pub range_cm: u16,
    pub battery_mv: u16,
    pub mode: u8,
    pub phase: u8,
    pub pan: u16,
    pub tilt: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    CmdDrive { throttle: i8, steer: i8 },
    CmdCamera { delta_pan: i16, delta_tilt: i8 },
    CmdMode { mode: u8 },
    CmdRecord { action: u8 },
    Telemetry(Telemetry),
    VideoFrame {
        tick: u64,
        pan: u16,
        width: u16,
        height: u16,
        pixels: Vec<u8>,
    },
    Event { tick: u64, code: u8, detail: u8 },
}

impl Message {
    pub fn type_code(&self) -> u8 {
        match self {
            Message::CmdDrive { .. } => TYPE_CMD_DRIVE,
            Message::CmdCamera { .. } => TYPE_CMD_CAMERA,
            Message::CmdMode { .. } => TYPE_CMD_MODE,
            Message::CmdRecord { .. } => TYPE_CMD_RECORD,
            Message::Telemetry(_) => TYPE_TELEMETRY,
            Message::VideoFrame { .. } => TYPE_VIDEO_FRAME,
            Message::Event { .. } => TYPE_EVENT,
        }
    }

    pub fn is_command(&self) -> bool {
        self.type_code() < TYPE_TELEMETRY
    }

    /// Simulation tick for rover-originated messages.
    pub fn tick(&self) -> Option<u64> {
        match self {
            Message::Telemetry(t) => Some(t.tick),
            Message::VideoFrame { tick, .. } | Message::Event { tick, .. } => Some(*tick),
            _ => None,
        }
    }

    pub fn event(tick: u64, code: u8, detail: u8) -> Message {
        Message::Event { tick, code, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("video frame of {0} pixels exceeds the {MAX_VIDEO_PIXELS}-byte budget")]
    FrameTooLarge(usize),
    #[error("video frame has {actual} pixels but is {width}x{height}")]
    PixelCountMismatch { width: u16, height: u16, actual: usize },
}

/// Why a buffer could not be decoded. The numeric values are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum DecodeError {
    #[error("bad magic byte")]
    BadMagic = 1,
    #[error("unsupported protocol version")]
    BadVersion = 2,
    #[error("unknown message type")]
    BadType = 3,
    #[error("payload length does not match message type")]
    BadLength = 4,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Message { message: Message, consumed: usize },
    /// The buffer is a valid but incomplete prefix of a frame.
    NeedMore,
}

/// Appends the framed encoding of `msg` to `out`.
pub fn encode_into(msg: &Message, out: &mut Vec<u8>) -> Result<(), EncodeError> {
    let start = out.len();
    out.extend_from_slice(&[MAGIC, VERSION, msg.type_code(), 0, 0]);
    match msg {
        Message::CmdDrive { throttle, steer } => {
            out.extend_from_slice(&throttle.to_be_bytes());
            out.extend_from_slice(&steer.to_be_bytes());
        }
        Message::CmdCamera {
            delta_pan,
            delta_tilt,
        } => {
            out.extend_from_slice(&delta_pan.to_be_bytes());
            out.extend_from_slice(&delta_tilt.to_be_bytes());
        }
        Message::CmdMode { mode } => out.push(*mode),
        Message::CmdRecord { action } => out.push(*action),
        Message::Telemetry(t) => {
            out.extend_from_slice(&t.tick.to_be_bytes());
            for f in [t.x, t.y, t.heading, t.speed] {
                out.extend_from_slice(&f.to_be_bytes());
            }
            out.extend_from_slice(&t.range_cm.to_be_bytes());
            out.extend_from_slice(&t.battery_mv.to_be_bytes());
            out.push(t.mode);
            out.push(t.phase);
            out.extend_from_slice(&t.pan.to_be_bytes());
            out.extend_from_slice(&t.tilt.to_be_bytes());
        }
        Message::VideoFrame {
            tick,
            pan,
            width,
            height,
            pixels,
        } => {
            if pixels.len() > MAX_VIDEO_PIXELS {
                out.truncate(start);
                return Err(EncodeError::FrameTooLarge(pixels.len()));
            }
            if pixels.len() != usize::from(*width) * usize::from(*height) {
                out.truncate(start);
                return Err(EncodeError::PixelCountMismatch {
                    width: *width,
                    height: *height,
                    actual: pixels.len(),
                });
            }
            out.extend_from_slice(&tick.to_be_bytes());
            out.extend_from_slice(&pan.to_be_bytes());
            out.extend_from_slice(&width.to_be_bytes());
            out.extend_from_slice(&height.to_be_bytes());
            out.extend_from_slice(pixels);
        }
        Message::Event { tick, code, detail } => {
            out.extend_from_slice(&tick.to_be_bytes());
            out.push(*code);
            out.push(*detail);
        }
    }
    let payload_len = (out.len() - start - HEADER_LEN) as u16;
    out[start + 3..start + 5].copy_from_slice(&payload_len.to_be_bytes());
    Ok(())
}

pub fn encode(msg: &Message) -> Result<Vec<u8>, EncodeError> {
    let mut out = Vec::new();
    encode_into(msg, &mut out)?;
    Ok(out)
}

/// Payload length for fixed-size types; `None` for unknown or variable ones.
fn fixed_payload_len(ty: u8) -> Result<Option<usize>, DecodeError> {
    Ok(match ty {
        TYPE_CMD_DRIVE => Some(2),
        TYPE_CMD_CAMERA => Some(3),
        TYPE_CMD_MODE | TYPE_CMD_RECORD => Some(1),
        TYPE_TELEMETRY => Some(TELEMETRY_LEN),
        TYPE_EVENT => Some(EVENT_LEN),
        TYPE_VIDEO_FRAME => None,
        _ => return Err(DecodeError::BadType),
    })
}

/// Decodes one frame from the head of `buf`.
///
/// Never reads beyond `HEADER_LEN + length`. Header fields are validated as
/// soon as they are available, so a bad prefix fails without waiting for
/// more bytes.
pub fn decode(buf: &[u8]) -> Result<Decoded, DecodeError> {
    if let Some(&m) = buf.first() {
        if m != MAGIC {
            return Err(DecodeError::BadMagic);
        }
    }
    if let Some(&v) = buf.get(1) {
        if v != VERSION {
            return Err(DecodeError::BadVersion);
        }
    }
    let fixed = match buf.get(2) {
        Some(&ty) => fixed_payload_len(ty)?,
        None => return Ok(Decoded::NeedMore),
    };
    if buf.len() < HEADER_LEN {
        return Ok(Decoded::NeedMore);
    }
    let ty = buf[2];
    let len = usize::from(u16::from_be_bytes([buf[3], buf[4]]));
    match fixed {
        Some(expected) if expected != len => return Err(DecodeError::BadLength),
        None if len < VIDEO_HEADER_LEN => return Err(DecodeError::BadLength),
        _ => {}
    }
    if ty == TYPE_VIDEO_FRAME && buf.len() >= HEADER_LEN + VIDEO_HEADER_LEN {
        let p = &buf[HEADER_LEN..];
        let w = usize::from(u16::from_be_bytes([p[10], p[11]]));
        let h = usize::from(u16::from_be_bytes([p[12], p[13]]));
        if w * h != len - VIDEO_HEADER_LEN {
            return Err(DecodeError::BadLength);
        }
    }
    let total = HEADER_LEN + len;
    if buf.len() < total {
        return Ok(Decoded::NeedMore);
    }
    let mut r = Reader::new(&buf[HEADER_LEN..total]);
    let message = match ty {
        TYPE_CMD_DRIVE => Message::CmdDrive {
            throttle: r.i8(),
            steer: r.i8(),
        },
        TYPE_CMD_CAMERA => Message::CmdCamera {
            delta_pan: r.i16(),
            delta_tilt: r.i8(),
        },
        TYPE_CMD_MODE => Message::CmdMode { mode: r.u8() },
        TYPE_CMD_RECORD => Message::CmdRecord { action: r.u8() },
        TYPE_TELEMETRY => Message::Telemetry(Telemetry {
            tick: r.u64(),
            x: r.f32(),
            y: r.f32(),
            heading: r.f32(),
            speed: r.f32(),
            range_cm: r.u16(),
            battery_mv: r.u16(),
            mode: r.u8(),
            phase: r.u8(),
            pan: r.u16(),
            tilt: r.i8(),
        }),
        TYPE_VIDEO_FRAME => Message::VideoFrame {
            tick: r.u64(),
            pan: r.u16(),
            width: r.u16(),
            height: r.u16(),
            pixels: r.rest().to_vec(),
        },
        TYPE_EVENT => Message::Event {
            tick: r.u64(),
            code: r.u8(),
            detail: r.u8(),
        },
        _ => unreachable!("type validated above"),
    };
    Ok(Decoded::Message {
        message,
        consumed: total,
    })
}

/// Cursor over a payload whose length was already validated.
struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    fn take<const N: usize>(&mut self) -> [u8; N] {
        let (head, tail) = self.buf.split_at(N);
        self.buf = tail;
        head.try_into().expect("split_at yields N bytes")
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn i8(&mut self) -> i8 {
        i8::from_be_bytes(self.take())
    }

    fn u16(&mut self) -> u16 {
        u16::from_be_bytes(self.take())
    }

    fn i16(&mut self) -> i16 {
        i16::from_be_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_be_bytes(self.take())
    }

    fn f32(&mut self) -> f32 {
        f32::from_be_bytes(self.take())
    }

    fn rest(&mut self) -> &'a [u8] {
        std::mem::take(&mut self.buf)
    }
}

/// Incremental decoder for a byte stream (one per connection).
#[derive(Debug, Default)]
pub struct StreamDecoder {
    buf: Vec<u8>,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Next complete message, `Ok(None)` when more bytes are needed.
    /// After an error the stream is unusable and should be dropped.
    pub fn next_message(&mut self) -> Result<Option<Message>, DecodeError> {
        match decode(&self.buf)? {
            Decoded::Message { message, consumed } => {
                self.buf.drain(..consumed);
                Ok(Some(message))
            }
            Decoded::NeedMore => Ok(None),
        }
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }
}
