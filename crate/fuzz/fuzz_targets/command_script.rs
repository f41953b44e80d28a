#![no_main]

use libfuzzer_sys::fuzz_target;
use rover_core::script::{format_script, parse_script};

fuzz_target!(|text: &str| {
    if let Ok(commands) = parse_script(text) {
        assert!(commands.windows(2).all(|w| w[0].tick <= w[1].tick));
        assert_eq!(parse_script(&format_script(&commands)).unwrap(), commands);
    }
});
