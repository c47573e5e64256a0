//! Deterministic seed streams derived from one master seed.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `stream` under `parent`. Distinct streams give unrelated seeds.
pub fn derive(parent: u64, stream: u64) -> u64 {
    mix(mix(parent) ^ stream.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Child seed for a path of stream labels.
pub fn derive_path(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(parent, |s, &p| derive(s, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive(7, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_eq!(derive(7, 3), derive(7, 3));
        assert_ne!(derive_path(1, &[2, 3]), derive_path(1, &[3, 2]));
    }
}
