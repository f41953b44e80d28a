#![no_main]

use libfuzzer_sys::fuzz_target;
use rover_core::load_world;

fuzz_target!(|text: &str| {
    if let Ok(world) = load_world(text) {
        assert_eq!(load_world(&world.to_text()).unwrap(), world);
    }
});
