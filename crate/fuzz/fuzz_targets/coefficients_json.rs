#![no_main]

use fri_sphere::io::{coefficients_to_json, parse_coefficients};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(flm) = parse_coefficients(text) {
        let again = parse_coefficients(&coefficients_to_json(&flm)).expect("serialized coefficients parse");
        assert_eq!(again, flm);
    }
});
