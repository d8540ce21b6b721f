#![no_main]

use fri_sphere::io::{instance_to_json, parse_instance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(diracs) = parse_instance(text) {
        let again = parse_instance(&instance_to_json(&diracs)).expect("serialized instance parses");
        assert_eq!(again, diracs);
    }
});
