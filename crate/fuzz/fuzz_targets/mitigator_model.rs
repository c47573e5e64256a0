#![no_main]

use frenkel_core::mitigation::MitigatorModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(model) = MitigatorModel::from_json(data) {
        let width = model.encoding.width;
        if width <= 8 {
            let uniform = vec![1.0 / (1u64 << width) as f64; 1 << width];
            let _ = model.mitigate_probabilities(&uniform, None);
        }
        let again = MitigatorModel::from_json(&model.to_json()).expect("a loaded model reloads");
        assert_eq!(again.hash(), model.hash());
    }
});
