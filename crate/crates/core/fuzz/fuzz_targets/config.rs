#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((cfg, _)) = ferrolayer::config::parse_config(text) {
            // accepted configs must hash and convert without panicking
            let _ = cfg.hash();
            let _ = cfg.study_config().validate();
        }
    }
});
