#![no_main]

use fri_sphere::io::parse_experiment_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_experiment_config(text) {
        assert!(cfg.trials >= 1 && !cfg.k_values.is_empty());
        assert!(cfg.tolerances().is_ok());
    }
});
