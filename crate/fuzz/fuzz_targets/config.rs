#![no_main]

use libfuzzer_sys::fuzz_target;
use sqha::config::{parse_config, to_config_text};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        let again = parse_config(&to_config_text(&cfg)).expect("canonical text parses");
        assert_eq!(to_config_text(&again), to_config_text(&cfg));
        let _ = cfg.validate();
    }
});
