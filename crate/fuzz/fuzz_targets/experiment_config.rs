#![no_main]

use std::path::Path;

use frenkel_cli::{Experiment, Overrides};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let o = Overrides { out: Some("out".into()), ..Default::default() };
    // Only bundled references resolve: the base directory does not exist.
    let _ = Experiment::from_text(data, Path::new("/nonexistent"), &o);
});
