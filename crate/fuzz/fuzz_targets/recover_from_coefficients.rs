#![no_main]

use fri_sphere::io::parse_coefficients;
use fri_sphere::recovery::recover;
use libfuzzer_sys::fuzz_target;

// First byte selects K; the rest is a coefficient file.
fuzz_target!(|data: &[u8]| {
    let Some((&k, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let Ok(flm) = parse_coefficients(text) else { return };
    if flm.bandlimit() > 32 {
        return;
    }
    if let Ok(result) = recover(&flm, usize::from(k % 24)) {
        for d in &result.diracs {
            assert!((0.0..=std::f64::consts::PI).contains(&d.theta));
            assert!((0.0..std::f64::consts::TAU).contains(&d.phi));
        }
    }
});
