#![no_main]

use cran_mud::scenario::{layout_from_key_values, parse_index_set, ScenarioSpec};
use cran_mud::textio::parse_key_values;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(kv) = parse_key_values(text) else {
        return;
    };
    if let Ok(spec) = ScenarioSpec::from_key_values(&kv) {
        assert_eq!(ScenarioSpec::from_key_values(&spec.to_key_values()).unwrap(), spec);
    }
    if let (Ok(layout), Some(list)) = (layout_from_key_values(&kv), kv.get("active_set")) {
        if let Ok(set) = parse_index_set(list, layout.users) {
            assert!(set.iter().all(|&i| (1..=layout.users).contains(&i)));
        }
    }
});
