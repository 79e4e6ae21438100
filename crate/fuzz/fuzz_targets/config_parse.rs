#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = deepwave::config::parse_config(text) {
            // validation must never panic either
            let _ = cfg.validate();
        }
    }
});
