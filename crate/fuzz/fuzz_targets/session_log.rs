#![no_main]

use libfuzzer_sys::fuzz_target;
use rover_core::encode;
use rover_core::session::{read_log_bytes, LOG_MAGIC};

fuzz_target!(|data: &[u8]| {
    match read_log_bytes(data) {
        Ok(records) => {
            let mut rebuilt = LOG_MAGIC.to_vec();
            for m in &records {
                rebuilt.extend(encode(m).unwrap());
            }
            assert_eq!(rebuilt, data);
        }
        Err(e) => {
            if let Some(offset) = e.offset() {
                assert!(offset <= data.len() as u64);
            }
        }
    }
});
