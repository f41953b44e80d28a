//! Chunked input must decode exactly like the whole buffer at once.

#![no_main]

use libfuzzer_sys::fuzz_target;
use rover_core::{decode, Decoded, Message, StreamDecoder};

fn whole(mut data: &[u8]) -> (Vec<Message>, bool) {
    let mut out = Vec::new();
    loop {
        match decode(data) {
            Ok(Decoded::Message { message, consumed }) => {
                out.push(message);
                data = &data[consumed..];
            }
            Ok(Decoded::NeedMore) => return (out, false),
            Err(_) => return (out, true),
        }
    }
}

fuzz_target!(|input: (u8, &[u8])| {
    let (chunk, data) = input;
    let chunk = usize::from(chunk.max(1));
    let mut dec = StreamDecoder::new();
    let mut got = Vec::new();
    let mut failed = false;
    'feed: for piece in data.chunks(chunk) {
        dec.push(piece);
        loop {
            match dec.next_message() {
                Ok(Some(m)) => got.push(m),
                Ok(None) => break,
                Err(_) => {
                    failed = true;
                    break 'feed;
                }
            }
        }
    }
    let (expected, expected_err) = whole(data);
    assert_eq!(got, expected);
    assert_eq!(failed, expected_err);
});
