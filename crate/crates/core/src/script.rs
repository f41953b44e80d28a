//! Headless command scripts: one `<tick> <wire-frame-as-hex>` per line.
//!
//! ```text
//! # switch to AUTO at tick 0, snapshot at tick 10
//! 0  C3 01 03 00 01 01
//! 10 c30104000102
//! ```
//!
//! Whitespace inside the hex is ignored. Each line must hold exactly one
//! complete command frame. Ticks must be non-decreasing.

use thiserror::Error;

use crate::protocol::{self, Decoded, Message};

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedCommand {
    pub tick: u64,
    pub message: Message,
}

#[derive(Debug, Error, PartialEq)]
#[error("script line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptedCommand>, ScriptError> {
    let mut out: Vec<ScriptedCommand> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ScriptError {
            line: idx + 1,
            message,
        };
        let (tick_str, hex_part) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| err("expected `<tick> <hex>`".into()))?;
        let tick: u64 = tick_str
            .parse()
            .map_err(|_| err(format!("`{tick_str}` is not a tick number")))?;
        let compact: String = hex_part.chars().filter(|c| !c.is_whitespace()).collect();
        let bytes = hex::decode(&compact).map_err(|e| err(format!("bad hex: {e}")))?;
        let message = match protocol::decode(&bytes) {
            Ok(Decoded::Message { message, consumed }) if consumed == bytes.len() => message,
            Ok(Decoded::Message { .. }) => return Err(err("trailing bytes after frame".into())),
            Ok(Decoded::NeedMore) => return Err(err("incomplete frame".into())),
            Err(e) => return Err(err(format!("undecodable frame: {e}"))),
        };
        if !message.is_command() {
            return Err(err("only command frames may be scripted".into()));
        }
        if out.last().is_some_and(|prev| prev.tick > tick) {
            return Err(err("ticks must be non-decreasing".into()));
        }
        out.push(ScriptedCommand { tick, message });
    }
    Ok(out)
}

/// Renders a script back to text (uppercase hex, one command per line).
pub fn format_script(commands: &[ScriptedCommand]) -> String {
    commands
        .iter()
        .map(|c| {
            let bytes = protocol::encode(&c.message).expect("commands always encode");
            format!("{} {}\n", c.tick, hex::encode_upper(bytes))
        })
        .collect()
}
