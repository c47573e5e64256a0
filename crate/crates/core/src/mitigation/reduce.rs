//! Post-selection onto the one-exciton sector and Hamming-distance-1 reduction.

use serde::{Deserialize, Serialize};

use super::MitigationError;
use crate::sim::ShotHistogram;

/// Basis indices within Hamming distance 1 of a one-hot string, in canonical order:
/// all-zeros, then one-hot strings, then two-hot strings, each ascending by index.
pub fn kept_basis(width: usize) -> Vec<usize> {
    let mut kept = vec![0];
    kept.extend((0..width).map(|m| 1usize << m));
    let mut two: Vec<usize> = (0..width).flat_map(|a| (a + 1..width).map(move |b| (1 << a) | (1 << b))).collect();
    two.sort_unstable();
    kept.extend(two);
    kept
}

/// `1 + n + n(n−1)/2`.
pub fn kept_size(width: usize) -> usize {
    1 + width + width * width.saturating_sub(1) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedDistribution {
    pub width: usize,
    /// Probabilities over [`kept_basis`].
    pub probabilities: Vec<f64>,
    pub discarded_mass: f64,
}

impl ReducedDistribution {
    pub fn kept_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// The one-hot block (molecule order).
    pub fn one_hot(&self) -> &[f64] {
        &self.probabilities[1..=self.width]
    }
}

pub fn hd_reduce(histogram: &ShotHistogram) -> ReducedDistribution {
    hd_reduce_probabilities(&histogram.frequencies(), histogram.width())
}

pub fn hd_reduce_probabilities(probs: &[f64], width: usize) -> ReducedDistribution {
    let kept = kept_basis(width);
    let probabilities: Vec<f64> = kept.iter().map(|&i| probs[i]).collect();
    let total: f64 = probs.iter().sum();
    let discarded_mass = (total - probabilities.iter().sum::<f64>()).max(0.0);
    ReducedDistribution { width, probabilities, discarded_mass }
}

/// One-hot frequencies renormalized to sum 1, in molecule order.
pub fn post_select(histogram: &ShotHistogram) -> Result<Vec<f64>, MitigationError> {
    post_select_probabilities(&histogram.frequencies(), histogram.width())
}

pub fn post_select_probabilities(probs: &[f64], width: usize) -> Result<Vec<f64>, MitigationError> {
    let one_hot: Vec<f64> = (0..width).map(|m| probs[1 << m]).collect();
    let total: f64 = one_hot.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(MitigationError::NonPhysical);
    }
    Ok(one_hot.into_iter().map(|p| p / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basis_layout() {
        let k = kept_basis(5);
        assert_eq!(k.len(), 16);
        assert_eq!(kept_size(5), 16);
        assert_eq!(&k[..6], &[0, 1, 2, 4, 8, 16]);
        assert_eq!(&k[6..], &[3, 5, 6, 9, 10, 12, 17, 18, 20, 24]);
    }

    #[test]
    fn post_select_examples() {
        let h = ShotHistogram::from_bitstrings([("00001", 500), ("00010", 300), ("00011", 200)]).unwrap();
        let ps = post_select(&h).unwrap();
        for (a, b) in ps.iter().zip([0.625, 0.375, 0.0, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let clean = ShotHistogram::from_bitstrings([("00001", 100), ("10000", 300)]).unwrap();
        assert_eq!(post_select(&clean).unwrap(), vec![0.25, 0.0, 0.0, 0.0, 0.75]);
        let bad = ShotHistogram::from_bitstrings([("00011", 100)]).unwrap();
        assert_eq!(post_select(&bad), Err(MitigationError::NonPhysical));
    }

    #[test]
    fn reduce_examples() {
        let uniform = vec![1.0 / 32.0; 32];
        let r = hd_reduce_probabilities(&uniform, 5);
        assert!((r.kept_mass() - 0.5).abs() < 1e-15);
        assert!((r.discarded_mass - 0.5).abs() < 1e-15);
        let clean = ShotHistogram::from_bitstrings([("00001", 100), ("10000", 300)]).unwrap();
        let r = hd_reduce(&clean);
        assert_eq!(r.discarded_mass, 0.0);
        assert_eq!(r.one_hot(), &[0.25, 0.0, 0.0, 0.0, 0.75]);
    }

    proptest! {
        #[test]
        fn reduction_conserves_mass(counts in prop::collection::vec(0u64..50, 32)) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let mut h = ShotHistogram::new(5);
            for (i, &c) in counts.iter().enumerate() {
                h.record(i, c);
            }
            let r = hd_reduce(&h);
            prop_assert!((r.kept_mass() + r.discarded_mass - 1.0).abs() < 1e-9);
            prop_assert!(r.probabilities.iter().all(|&p| p >= 0.0));
        }

        #[test]
        fn post_selection_is_idempotent(counts in prop::collection::vec(0u64..50, 16)) {
            let mut h = ShotHistogram::new(4);
            for (i, &c) in counts.iter().enumerate() {
                h.record(i, c);
            }
            if let Ok(once) = post_select(&h) {
                let mut embedded = vec![0.0; 16];
                for (m, p) in once.iter().enumerate() {
                    embedded[1 << m] = *p;
                }
                let twice = post_select_probabilities(&embedded, 4).unwrap();
                for (a, b) in once.iter().zip(&twice) {
                    prop_assert!((a - b).abs() < 1e-15);
                }
            }
        }
    }
}
