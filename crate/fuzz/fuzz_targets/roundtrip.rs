#![no_main]

use arbitrary::{Result, Unstructured};
use libfuzzer_sys::fuzz_target;
use rover_core::{decode, encode, Decoded, Message, Telemetry};

fn message(u: &mut Unstructured) -> Result<Message> {
    Ok(match u.int_in_range(0..=6)? {
        0 => Message::CmdDrive { throttle: u.arbitrary()?, steer: u.arbitrary()? },
        1 => Message::CmdCamera { delta_pan: u.arbitrary()?, delta_tilt: u.arbitrary()? },
        2 => Message::CmdMode { mode: u.arbitrary()? },
        3 => Message::CmdRecord { action: u.arbitrary()? },
        4 => Message::Telemetry(Telemetry {
            tick: u.arbitrary()?,
            x: u.arbitrary()?,
            y: u.arbitrary()?,
            heading: u.arbitrary()?,
            speed: u.arbitrary()?,
            range_cm: u.arbitrary()?,
            battery_mv: u.arbitrary()?,
            mode: u.arbitrary()?,
            phase: u.arbitrary()?,
            pan: u.arbitrary()?,
            tilt: u.arbitrary()?,
        }),
        5 => {
            let width: u16 = u.int_in_range(0..=64)?;
            let height: u16 = u.int_in_range(0..=64)?;
            let pixels = u.bytes(usize::from(width) * usize::from(height))?.to_vec();
            Message::VideoFrame { tick: u.arbitrary()?, pan: u.arbitrary()?, width, height, pixels }
        }
        _ => Message::Event { tick: u.arbitrary()?, code: u.arbitrary()?, detail: u.arbitrary()? },
    })
}

fuzz_target!(|data: &[u8]| {
    let mut u = Unstructured::new(data);
    let Ok(msg) = message(&mut u) else { return };
    let bytes = encode(&msg).unwrap();
    match decode(&bytes).unwrap() {
        Decoded::Message { message, consumed } => {
            assert_eq!(consumed, bytes.len());
            // Compare encodings so NaN floats still count as equal.
            assert_eq!(encode(&message).unwrap(), bytes);
        }
        Decoded::NeedMore => panic!("complete frame reported incomplete"),
    }
});
