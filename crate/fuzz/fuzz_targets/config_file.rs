#![no_main]

use libfuzzer_sys::fuzz_target;
use rover_core::parse_config;

fuzz_target!(|text: &str| {
    if let Ok(cfg) = parse_config(text) {
        cfg.validate().unwrap();
    }
});
