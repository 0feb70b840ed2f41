#![no_main]

use libfuzzer_sys::fuzz_target;
use sqha::output::SummaryRecord;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = SummaryRecord::from_json(text) {
        let _ = SummaryRecord::from_json(&rec.to_json());
    }
});
