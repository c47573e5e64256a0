#![no_main]

use frenkel_core::mitigation::{hd_reduce, post_select};
use frenkel_core::sim::ShotHistogram;
use libfuzzer_sys::fuzz_target;

// One `bitstring count` pair per line.
fuzz_target!(|data: &str| {
    let entries: Vec<(&str, u64)> = data
        .lines()
        .filter_map(|l| {
            let (bits, count) = l.split_once(' ')?;
            Some((bits, count.parse().ok()?))
        })
        .collect();
    if let Ok(h) = ShotHistogram::from_bitstrings(entries) {
        if h.width() <= 12 {
            let reduced = hd_reduce(&h);
            assert!(reduced.kept_mass() <= 1.0 + 1e-12);
            let _ = post_select(&h);
            let map = h.to_bitstring_map();
            if map.is_empty() {
                return;
            }
            let again = ShotHistogram::from_bitstrings(map.iter().map(|(b, c)| (b.as_str(), *c))).unwrap();
            assert_eq!(again.to_bitstring_map(), map);
        }
    }
});
