#![no_main]

use fri_sphere::Tolerances;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut tol = Tolerances::default();
    let before = tol;
    if tol.apply_override(text).is_err() {
        assert_eq!(tol, before);
    }
});
