#![no_main]

use libfuzzer_sys::fuzz_target;
use squeezed_records::config::load_config_str;

// Parsing plus validation; a config that loads must also hash.
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = load_config_str(s) {
            let _ = cfg.hash();
        }
    }
});
