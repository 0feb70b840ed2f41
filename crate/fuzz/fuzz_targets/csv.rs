#![no_main]

use libfuzzer_sys::fuzz_target;
use sqha::output::{csv_text, parse_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_csv(text) {
        let again = parse_csv(&csv_text(&rows)).expect("written csv parses");
        assert_eq!(again.len(), rows.len());
    }
});
