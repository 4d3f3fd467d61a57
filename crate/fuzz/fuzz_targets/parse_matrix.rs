#![no_main]

use cran_mud::textio::{format_matrix, parse_matrix};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_matrix(text) {
        // Writing is canonical: a parsed matrix re-renders to a fixed point.
        let rendered = format_matrix(&m);
        let again = parse_matrix(&rendered).expect("rendered matrix parses");
        assert_eq!(format_matrix(&again), rendered);
    }
});
