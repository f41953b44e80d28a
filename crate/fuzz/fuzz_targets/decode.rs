#![no_main]

use libfuzzer_sys::fuzz_target;
use rover_core::{decode, encode, Decoded};

fuzz_target!(|data: &[u8]| {
    if let Ok(Decoded::Message { message, consumed }) = decode(data) {
        assert!(consumed <= data.len());
        // Anything accepted re-encodes to the bytes it came from.
        assert_eq!(encode(&message).unwrap(), &data[..consumed]);
    }
});
