#![no_main]

use cran_mud::harness::{parse_sweep_config, SweepSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = parse_sweep_config(text) {
        let again = SweepSpec::from_key_values(&spec.to_key_values()).expect("rendered config parses");
        assert_eq!(again, spec);
    }
});
