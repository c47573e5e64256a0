#![no_main]

use frenkel_core::sim::load_noise_model;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(noise) = load_noise_model(data) {
        let _ = noise.check_layout(&[0, 1, 2], 3);
    }
});
