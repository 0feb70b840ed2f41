#![no_main]

use clap::Parser;
use libfuzzer_sys::fuzz_target;
use sqha::cli::{resolve_config, Cli};

// Arguments are NUL-separated. Config files are not read from the fuzzer.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let argv = std::iter::once("sqha").chain(text.split('\0'));
    if argv.clone().any(|a| a.starts_with("--config")) {
        return;
    }
    if let Ok(cli) = Cli::try_parse_from(argv) {
        let _ = resolve_config(&cli.command);
    }
});
