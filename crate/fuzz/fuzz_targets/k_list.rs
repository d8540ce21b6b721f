#![no_main]

use fri_sphere::io::parse_k_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ks) = parse_k_list(text) {
        assert!(ks.iter().all(|&k| k >= 1));
    }
});
