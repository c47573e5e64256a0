#![no_main]

use frenkel_core::mitigation::read_dataset_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_dataset_csv(data);
});
