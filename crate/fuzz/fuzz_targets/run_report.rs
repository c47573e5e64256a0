#![no_main]

use frenkel_cli::RunReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = RunReport::from_json(data);
});
