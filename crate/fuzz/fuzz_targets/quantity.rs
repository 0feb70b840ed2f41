#![no_main]

use libfuzzer_sys::fuzz_target;
use sqha::units::{format_quantity, parse_quantity, Dimension};

const DIMS: [Dimension; 5] = [
    Dimension::Length,
    Dimension::Mass,
    Dimension::Energy,
    Dimension::Temperature,
    Dimension::Time,
];

fuzz_target!(|data: &[u8]| {
    let Some((&pick, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let dim = DIMS[pick as usize % DIMS.len()];
    if let Ok(v) = parse_quantity(text, dim) {
        assert!(v.is_finite());
        assert_eq!(parse_quantity(&format_quantity(v, dim), dim), Ok(v));
    }
});
