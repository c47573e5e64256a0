#![no_main]

use frenkel_core::exciton::{build_hamiltonian, diagonalize, ExcitonConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(config) = ExcitonConfig::from_toml(data) {
        if config.n <= 8 {
            if let Ok(h) = build_hamiltonian(&config) {
                let _ = diagonalize(&h);
            }
        }
    }
});
