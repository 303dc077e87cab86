#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((key, value)) = ferrolayer::config::parse_tol_override(text) {
            let mut cfg = ferrolayer::config::RunConfig::default();
            cfg.apply_override(&key, value).unwrap();
            assert!(value > 0.0);
        }
    }
});
