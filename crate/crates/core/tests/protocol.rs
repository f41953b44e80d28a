use proptest::collection::vec;
use proptest::prelude::*;
use rover_core::protocol::{self, DecodeError, HEADER_LEN, MAGIC, VERSION};
use rover_core::{decode, encode, Decoded, Message, StreamDecoder, Telemetry};

fn telemetry() -> impl Strategy<Value = Telemetry> {
    (
        any::<u64>(),
        (-1e6f32..1e6, -1e6f32..1e6, -10f32..10.0, -1f32..1.0),
        any::<u16>(),
        any::<u16>(),
        (any::<u8>(), any::<u8>(), any::<u16>(), any::<i8>()),
    )
        .prop_map(|(tick, (x, y, heading, speed), range_cm, battery_mv, (mode, phase, pan, tilt))| Telemetry {
            tick,
            x,
            y,
            heading,
            speed,
            range_cm,
            battery_mv,
            mode,
            phase,
            pan,
            tilt,
        })
}

fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        (any::<i8>(), any::<i8>()).prop_map(|(throttle, steer)| Message::CmdDrive { throttle, steer }),
        (any::<i16>(), any::<i8>())
            .prop_map(|(delta_pan, delta_tilt)| Message::CmdCamera { delta_pan, delta_tilt }),
        any::<u8>().prop_map(|mode| Message::CmdMode { mode }),
        any::<u8>().prop_map(|action| Message::CmdRecord { action }),
        telemetry().prop_map(Message::Telemetry),
        (any::<u64>(), any::<u16>(), 0u16..40, 0u16..40)
            .prop_flat_map(|(tick, pan, w, h)| {
                vec(any::<u8>(), usize::from(w) * usize::from(h)).prop_map(move |pixels| Message::VideoFrame {
                    tick,
                    pan,
                    width: w,
                    height: h,
                    pixels,
                })
            }),
        (any::<u64>(), any::<u8>(), any::<u8>())
            .prop_map(|(tick, code, detail)| Message::Event { tick, code, detail }),
    ]
}

fn decode_one(bytes: &[u8]) -> Message {
    match decode(bytes).expect("valid frame") {
        Decoded::Message { message, consumed } => {
            assert_eq!(consumed, bytes.len());
            message
        }
        Decoded::NeedMore => panic!("complete frame reported incomplete"),
    }
}

#[test]
fn golden_vectors() {
    let cases: &[(Message, &str)] = &[
        (Message::CmdDrive { throttle: 50, steer: -10 }, "c301010002 32f6"),
        (Message::CmdMode { mode: 1 }, "c30103000101"),
        (Message::CmdRecord { action: 2 }, "c30104000102"),
        (Message::CmdCamera { delta_pan: -90, delta_tilt: 5 }, "c3010200 03ffa605"),
        (Message::Event { tick: 7, code: 1, detail: 0 }, "c3011200 0a 0000000000000007 01 00"),
    ];
    for (msg, hex_str) in cases {
        let expected = hex::decode(hex_str.replace(' ', "")).unwrap();
        assert_eq!(encode(msg).unwrap(), expected, "{msg:?}");
        assert_eq!(&decode_one(&expected), msg);
    }
}

#[test]
fn telemetry_layout_is_big_endian_and_fixed() {
    let t = Telemetry {
        tick: 0x0102030405060708,
        x: 1.5,
        y: -2.0,
        heading: 0.25,
        speed: 0.5,
        range_cm: 0x1234,
        battery_mv: 12600,
        mode: 1,
        phase: 3,
        pan: 359,
        tilt: -30,
    };
    let bytes = encode(&Message::Telemetry(t)).unwrap();
    assert_eq!(bytes.len(), HEADER_LEN + protocol::TELEMETRY_LEN);
    assert_eq!(&bytes[..5], &[MAGIC, VERSION, 0x10, 0x00, 33]);
    assert_eq!(&bytes[5..13], &[1, 2, 3, 4, 5, 6, 7, 8]);
    assert_eq!(&bytes[13..17], &1.5f32.to_be_bytes());
    assert_eq!(&bytes[29..31], &[0x12, 0x34]);
    assert_eq!(&bytes[31..33], &12600u16.to_be_bytes());
    assert_eq!(&bytes[33..35], &[1, 3]);
    assert_eq!(&bytes[35..37], &359u16.to_be_bytes());
    assert_eq!(bytes[37], (-30i8) as u8);
}

#[test]
fn header_errors_are_reported_early() {
    assert_eq!(decode(&[0x00]), Err(DecodeError::BadMagic));
    assert_eq!(decode(&[MAGIC, 0x02]), Err(DecodeError::BadVersion));
    assert_eq!(decode(&[MAGIC, VERSION, 0x7f]), Err(DecodeError::BadType));
    // Telemetry must be exactly 33 bytes; known before the payload arrives.
    assert_eq!(decode(&[MAGIC, VERSION, 0x10, 0x00, 0x20]), Err(DecodeError::BadLength));
    assert_eq!(decode(&[MAGIC, VERSION, 0x01, 0x00]), Ok(Decoded::NeedMore));
    assert_eq!(decode(&[]), Ok(Decoded::NeedMore));
}

#[test]
fn video_dimensions_must_match_length() {
    let mut bytes = encode(&Message::VideoFrame {
        tick: 1,
        pan: 0,
        width: 4,
        height: 2,
        pixels: vec![9; 8],
    })
    .unwrap();
    // Claim a 5x2 frame in the same payload.
    bytes[HEADER_LEN + 11] = 5;
    assert_eq!(decode(&bytes), Err(DecodeError::BadLength));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn roundtrip(msg in message()) {
        let bytes = encode(&msg).unwrap();
        prop_assert_eq!(decode_one(&bytes), msg);
    }

    #[test]
    fn distinct_messages_encode_distinctly(a in message(), b in message()) {
        prop_assume!(a != b);
        prop_assert_ne!(encode(&a).unwrap(), encode(&b).unwrap());
    }

    #[test]
    fn decoder_never_panics(buf in vec(any::<u8>(), 0..256)) {
        match decode(&buf) {
            Ok(Decoded::Message { consumed, .. }) => prop_assert!(consumed <= buf.len()),
            Ok(Decoded::NeedMore) | Err(_) => {}
        }
    }

    #[test]
    fn decoder_survives_framed_garbage(ty in prop_oneof![Just(0x01u8), Just(0x02), Just(0x03), Just(0x04), Just(0x10), Just(0x11), Just(0x12)],
                                       payload in vec(any::<u8>(), 0..64)) {
        let mut buf = vec![MAGIC, VERSION, ty];
        buf.extend_from_slice(&(payload.len() as u16).to_be_bytes());
        buf.extend_from_slice(&payload);
        if let Ok(Decoded::Message { message, consumed }) = decode(&buf) {
            prop_assert_eq!(consumed, buf.len());
            prop_assert_eq!(encode(&message).unwrap(), buf);
        }
    }

    #[test]
    fn stream_decoder_is_chunking_invariant(msgs in vec(message(), 1..8), cuts in vec(1usize..50, 1..20)) {
        let mut bytes = Vec::new();
        for m in &msgs {
            protocol::encode_into(m, &mut bytes).unwrap();
        }
        let mut dec = StreamDecoder::new();
        let mut got = Vec::new();
        let mut rest = &bytes[..];
        let mut cut = cuts.iter().cycle();
        while !rest.is_empty() {
            let n = (*cut.next().unwrap()).min(rest.len());
            dec.push(&rest[..n]);
            rest = &rest[n..];
            while let Some(m) = dec.next_message().unwrap() {
                got.push(m);
            }
        }
        prop_assert_eq!(got, msgs);
        prop_assert_eq!(dec.buffered(), 0);
    }
}
