//! One-exciton ansatz: a ladder of controlled rotations that keeps exactly one qubit
//! excited, plus the closed-form map from its angles to basis amplitudes.
//!
//! Amplitude `m` (0-based) sits on the basis state with only qubit `m` set. With
//! angles `P_1 … P_{n-1}`:
//!
//! ```text
//! c_1 = cos(P_1/2)
//! c_k = sin(P_1/2) · cos P_2 ⋯ cos P_{k-1} · sin P_k     (2 ≤ k ≤ n-1)
//! c_n = sin(P_1/2) · cos P_2 ⋯ cos P_{n-1}
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Circuit, Gate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnsatzError {
    #[error("ansatz needs at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("expected {expected} angles, got {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("amplitudes not normalized: Σc² = {0}")]
    NotNormalized(f64),
}

/// Rotation angles `P_1 … P_{n-1}` in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnsatzParameters(Vec<f64>);

impl AnsatzParameters {
    pub fn new(theta: Vec<f64>) -> Self {
        AnsatzParameters(theta)
    }

    pub fn zeros(width: usize) -> Self {
        AnsatzParameters(vec![0.0; width.saturating_sub(1)])
    }

    pub fn theta(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Number of molecules / qubits these angles describe.
    pub fn width(&self) -> usize {
        self.0.len() + 1
    }
}

impl From<Vec<f64>> for AnsatzParameters {
    fn from(theta: Vec<f64>) -> Self {
        AnsatzParameters(theta)
    }
}

/// Real amplitudes over the one-hot basis, qubit 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AmplitudeVector(Vec<f64>);

impl AmplitudeVector {
    /// Checks `Σc² = 1` within 1e-12.
    pub fn new(c: Vec<f64>) -> Result<Self, AnsatzError> {
        let norm: f64 = c.iter().map(|x| x * x).sum();
        if c.len() < 2 {
            return Err(AnsatzError::TooFewQubits(c.len()));
        }
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(AnsatzError::NotNormalized(norm));
        }
        Ok(AmplitudeVector(c))
    }

    /// Normalizes `c` first.
    pub fn normalized(mut c: Vec<f64>) -> Result<Self, AnsatzError> {
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(AnsatzError::NotNormalized(norm * norm));
        }
        c.iter_mut().for_each(|x| *x /= norm);
        Self::new(c)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &AmplitudeVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Squared amplitudes.
    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|c| c * c).collect()
    }

    /// Full `2^n` real statevector.
    pub fn embed(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1 << self.0.len()];
        for (m, &c) in self.0.iter().enumerate() {
            v[1 << m] = c;
        }
        v
    }
}

/// Ansatz circuit on `width` qubits starting from `|0…0⟩`.
///
/// One RY on qubit 1, then for each later qubit `k` the block RY(P_k)·CNOT(k−1→k)·RY(−P_k),
/// which leaves qubits `1..=k` in a thermometer code. An X on qubit 0 and a descending CNOT
/// chain turn the thermometer code into a one-hot code. CNOT count is `2·width − 3`.
pub fn build_ansatz(width: usize, params: &AnsatzParameters) -> Result<Circuit, AnsatzError> {
    if width < 2 {
        return Err(AnsatzError::TooFewQubits(width));
    }
    let p = params.theta();
    if p.len() != width - 1 {
        return Err(AnsatzError::ParameterCount { expected: width - 1, found: p.len() });
    }
    let mut gates = Vec::with_capacity(4 * width);
    gates.push(Gate::ry(1, p[0]));
    for k in 2..width {
        gates.push(Gate::ry(k, p[k - 1]));
        gates.push(Gate::cnot(k - 1, k));
        gates.push(Gate::ry(k, -p[k - 1]));
    }
    gates.push(Gate::x(0));
    for k in 1..width {
        gates.push(Gate::cnot(k, k - 1));
    }
    Ok(Circuit::from_gates(width, gates).expect("ansatz gates are in range"))
}

pub fn amplitude_map(params: &AnsatzParameters) -> AmplitudeVector {
    let p = params.theta();
    let n = p.len() + 1;
    let mut c = Vec::with_capacity(n);
    if p.is_empty() {
        return AmplitudeVector(vec![1.0]);
    }
    let (s1, c1) = (p[0] / 2.0).sin_cos();
    c.push(c1);
    let mut carry = s1;
    for &pk in &p[1..] {
        let (s, co) = pk.sin_cos();
        c.push(carry * s);
        carry *= co;
    }
    c.push(carry);
    AmplitudeVector(c)
}

/// `|⟨ψ_a|ψ_b⟩|²` from the closed-form amplitudes.
pub fn overlap(a: &AnsatzParameters, b: &AnsatzParameters) -> Result<f64, AnsatzError> {
    if a.width() != b.width() {
        return Err(AnsatzError::WidthMismatch(a.width(), b.width()));
    }
    let d = amplitude_map(a).dot(&amplitude_map(b));
    Ok((d * d).min(1.0))
}

/// Angles whose amplitude map reproduces `c` exactly.
///
/// Angles past a tail with norm below 1e-14 are set to zero.
pub fn invert_amplitudes(c: &AmplitudeVector) -> AnsatzParameters {
    let c = c.as_slice();
    let n = c.len();
    // suffix[k] = ‖c[k..]‖
    let mut suffix = vec![0.0f64; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1].hypot(c[k]);
    }
    let mut p = Vec::with_capacity(n - 1);
    if n == 2 {
        p.push(2.0 * c[1].atan2(c[0]));
        return AnsatzParameters(p);
    }
    p.push(2.0 * suffix[1].atan2(c[0]));
    for k in 1..n - 1 {
        if suffix[k] < 1e-14 {
            p.push(0.0);
        } else if k == n - 2 {
            p.push(c[k].atan2(c[k + 1]));
        } else {
            p.push(c[k].atan2(suffix[k + 1]));
        }
    }
    AnsatzParameters(p)
}
