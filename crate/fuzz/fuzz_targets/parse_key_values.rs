#![no_main]

use cran_mud::textio::parse_key_values;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(kv) = parse_key_values(text) {
        let again = parse_key_values(&kv.render()).expect("rendered pairs parse");
        assert_eq!(again, kv);
    }
});
