use std::collections::BTreeMap;

use super::state::{format_bitstring, parse_bitstring};
use super::SimError;

/// Measured outcome counts. Keys are basis indices; bitstring views put qubit 0 rightmost.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShotHistogram {
    width: usize,
    counts: BTreeMap<usize, u64>,
    shots: u64,
}

impl ShotHistogram {
    pub fn new(width: usize) -> Self {
        ShotHistogram { width, counts: BTreeMap::new(), shots: 0 }
    }

    /// Build from `(bitstring, count)` pairs; every bitstring must have the same length.
    pub fn from_bitstrings<'a>(entries: impl IntoIterator<Item = (&'a str, u64)>) -> Result<Self, SimError> {
        let mut hist: Option<ShotHistogram> = None;
        for (bits, count) in entries {
            let index = parse_bitstring(bits)?;
            let h = hist.get_or_insert_with(|| ShotHistogram::new(bits.len()));
            if bits.len() != h.width {
                return Err(SimError::WidthMismatch { expected: h.width, found: bits.len() });
            }
            if h.shots.checked_add(count).is_none() {
                return Err(SimError::ShotOverflow);
            }
            h.record(index, count);
        }
        hist.ok_or_else(|| SimError::BadBitstring(String::new()))
    }

    /// Add `count` shots of outcome `index`.
    pub fn record(&mut self, index: usize, count: u64) {
        assert!(index < 1usize << self.width, "outcome {index} outside width {}", self.width);
        if count == 0 {
            return;
        }
        *self.counts.entry(index).or_insert(0) += count;
        self.shots += count;
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn is_empty(&self) -> bool {
        self.shots == 0
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn count_bitstring(&self, bits: &str) -> Result<u64, SimError> {
        Ok(self.count(parse_bitstring(bits)?))
    }

    /// Nonzero `(index, count)` entries in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    pub fn to_bitstring_map(&self) -> BTreeMap<String, u64> {
        self.iter().map(|(k, v)| (format_bitstring(k, self.width), v)).collect()
    }

    /// Dense frequency vector of length `2^width`.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1usize << self.width];
        if self.shots == 0 {
            return out;
        }
        for (k, v) in self.iter() {
            out[k] = v as f64 / self.shots as f64;
        }
        out
    }

    /// Internal consistency: counts sum to `shots` and keys fit the width.
    pub fn validate(&self) -> Result<(), SimError> {
        let sum: u64 = self.counts.values().sum();
        if sum != self.shots {
            return Err(SimError::ShotMismatch { sum, shots: self.shots });
        }
        if let Some((&k, _)) = self.counts.iter().next_back() {
            if k >= 1usize << self.width {
                return Err(SimError::BasisOutOfRange { index: k, width: self.width });
            }
        }
        Ok(())
    }
}
