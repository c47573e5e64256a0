//! Device noise model: per-qubit relaxation and readout data, per-pair two-qubit errors,
//! and the channels the density-matrix simulator interleaves with each gate.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gate::{Mat2, PAULI_X, PAULI_Y, PAULI_Z};
use super::state::QuantumState;
use super::SimError;
use crate::DocumentError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitNoise {
    pub t1_us: f64,
    pub t2_us: f64,
    pub prob_meas0_prep1: f64,
    pub prob_meas1_prep0: f64,
    pub gate_error_1q: f64,
}

impl QubitNoise {
    pub const IDEAL: QubitNoise = QubitNoise {
        t1_us: f64::INFINITY,
        t2_us: f64::INFINITY,
        prob_meas0_prep1: 0.0,
        prob_meas1_prep0: 0.0,
        gate_error_1q: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDurations {
    pub single_qubit: f64,
    pub two_qubit: f64,
    pub measure: f64,
}

impl Default for GateDurations {
    fn default() -> Self {
        GateDurations { single_qubit: 35.0, two_qubit: 300.0, measure: 700.0 }
    }
}

/// Noise parameters keyed by physical qubit index.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    qubits: BTreeMap<usize, QubitNoise>,
    /// Directed pair errors; loading fills in the reverse direction when only one is given.
    pairs: BTreeMap<(usize, usize), f64>,
    /// Used for pairs the document does not list, when present.
    default_cx_error: Option<f64>,
    durations: GateDurations,
}

// Document schema. `deny_unknown_fields` keeps typos from silently becoming defaults.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseDocument {
    #[serde(default)]
    qubits: Vec<QubitRecord>,
    #[serde(default)]
    pairs: Vec<PairRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default_cx_error: Option<f64>,
    #[serde(default)]
    durations_ns: DurationRecord,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QubitRecord {
    index: usize,
    t1_us: f64,
    t2_us: f64,
    prob_meas0_prep1: f64,
    prob_meas1_prep0: f64,
    gate_error_1q: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRecord {
    a: usize,
    b: usize,
    cx_error: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DurationRecord {
    #[serde(default = "d_single")]
    single_qubit: f64,
    #[serde(default = "d_two")]
    two_qubit: f64,
    #[serde(default = "d_measure")]
    measure: f64,
}

fn d_single() -> f64 {
    GateDurations::default().single_qubit
}
fn d_two() -> f64 {
    GateDurations::default().two_qubit
}
fn d_measure() -> f64 {
    GateDurations::default().measure
}

impl Default for DurationRecord {
    fn default() -> Self {
        let d = GateDurations::default();
        DurationRecord { single_qubit: d.single_qubit, two_qubit: d.two_qubit, measure: d.measure }
    }
}

fn check_probability(path: String, value: f64) -> Result<(), DocumentError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(DocumentError::invalid(path, format!("probability {value} outside [0, 1]")));
    }
    Ok(())
}

/// Parse and validate a noise-model document (TOML).
pub fn load_noise_model(document: &str) -> Result<NoiseModel, DocumentError> {
    let doc: NoiseDocument = toml::from_str(document).map_err(|e| DocumentError::Parse(e.to_string()))?;
    let mut qubits = BTreeMap::new();
    for (i, q) in doc.qubits.iter().enumerate() {
        let path = |field: &str| format!("qubits[{i}].{field}");
        check_probability(path("prob_meas0_prep1"), q.prob_meas0_prep1)?;
        check_probability(path("prob_meas1_prep0"), q.prob_meas1_prep0)?;
        check_probability(path("gate_error_1q"), q.gate_error_1q)?;
        if q.t1_us.is_nan() || q.t1_us <= 0.0 {
            return Err(DocumentError::invalid(path("t1_us"), format!("t1 must be > 0, got {}", q.t1_us)));
        }
        if q.t2_us.is_nan() || q.t2_us <= 0.0 {
            return Err(DocumentError::invalid(path("t2_us"), format!("t2 must be > 0, got {}", q.t2_us)));
        }
        if q.t1_us.is_finite() && q.t2_us > 2.0 * q.t1_us {
            return Err(DocumentError::invalid(
                path("t2_us"),
                format!("t2 = {} exceeds 2·t1 = {}", q.t2_us, 2.0 * q.t1_us),
            ));
        }
        let record = QubitNoise {
            t1_us: q.t1_us,
            t2_us: q.t2_us,
            prob_meas0_prep1: q.prob_meas0_prep1,
            prob_meas1_prep0: q.prob_meas1_prep0,
            gate_error_1q: q.gate_error_1q,
        };
        if qubits.insert(q.index, record).is_some() {
            return Err(DocumentError::invalid(path("index"), format!("qubit {} listed twice", q.index)));
        }
    }

    let mut pairs = BTreeMap::new();
    for (i, p) in doc.pairs.iter().enumerate() {
        let path = |field: &str| format!("pairs[{i}].{field}");
        check_probability(path("cx_error"), p.cx_error)?;
        if p.a == p.b {
            return Err(DocumentError::invalid(
                path("b"),
                format!("pair ({}, {}) couples a qubit to itself", p.a, p.b),
            ));
        }
        for q in [p.a, p.b] {
            if !qubits.contains_key(&q) {
                return Err(DocumentError::invalid(path("a"), format!("qubit {q} has no qubit record")));
            }
        }
        if pairs.insert((p.a, p.b), p.cx_error).is_some() {
            return Err(DocumentError::invalid(path("a"), format!("pair ({}, {}) listed twice", p.a, p.b)));
        }
    }
    let directed: Vec<((usize, usize), f64)> = pairs.iter().map(|(&k, &v)| (k, v)).collect();
    for ((a, b), e) in directed {
        pairs.entry((b, a)).or_insert(e);
    }

    if let Some(d) = doc.default_cx_error {
        check_probability("default_cx_error".into(), d)?;
    }
    let dur = &doc.durations_ns;
    for (name, v) in [("single_qubit", dur.single_qubit), ("two_qubit", dur.two_qubit), ("measure", dur.measure)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(DocumentError::invalid(
                format!("durations_ns.{name}"),
                format!("duration must be ≥ 0, got {v}"),
            ));
        }
    }

    Ok(NoiseModel {
        qubits,
        pairs,
        default_cx_error: doc.default_cx_error,
        durations: GateDurations { single_qubit: dur.single_qubit, two_qubit: dur.two_qubit, measure: dur.measure },
    })
}

impl NoiseModel {
    /// A model on qubits `0..n` with no errors at all.
    pub fn noiseless(n: usize) -> Self {
        NoiseModel {
            qubits: (0..n).map(|q| (q, QubitNoise::IDEAL)).collect(),
            pairs: BTreeMap::new(),
            default_cx_error: Some(0.0),
            durations: GateDurations::default(),
        }
    }

    /// Uniform model, handy for tests: every qubit shares `qubit`, every pair has `cx_error`.
    pub fn uniform(n: usize, qubit: QubitNoise, cx_error: f64) -> Self {
        NoiseModel {
            qubits: (0..n).map(|q| (q, qubit)).collect(),
            pairs: BTreeMap::new(),
            default_cx_error: Some(cx_error),
            durations: GateDurations::default(),
        }
    }

    pub fn with_durations(mut self, durations: GateDurations) -> Self {
        self.durations = durations;
        self
    }

    pub fn with_default_cx_error(mut self, error: Option<f64>) -> Self {
        self.default_cx_error = error;
        self
    }

    pub fn qubit(&self, physical: usize) -> Result<&QubitNoise, SimError> {
        self.qubits.get(&physical).ok_or(SimError::UnknownQubit(physical))
    }

    pub fn qubit_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.qubits.keys().copied()
    }

    pub fn cx_error(&self, a: usize, b: usize) -> Result<f64, SimError> {
        self.pairs.get(&(a, b)).copied().or(self.default_cx_error).ok_or(SimError::MissingPair(a, b))
    }

    pub fn durations(&self) -> GateDurations {
        self.durations
    }

    pub fn default_cx_error(&self) -> Option<f64> {
        self.default_cx_error
    }

    /// Serialize back to the document format.
    pub fn to_document(&self) -> String {
        let mut seen = std::collections::BTreeSet::new();
        let mut pairs = Vec::new();
        for (&(a, b), &e) in &self.pairs {
            if seen.contains(&(b, a)) && self.pairs.get(&(b, a)) == Some(&e) {
                continue;
            }
            seen.insert((a, b));
            pairs.push(PairRecord { a, b, cx_error: e });
        }
        let doc = NoiseDocument {
            qubits: self
                .qubits
                .iter()
                .map(|(&index, q)| QubitRecord {
                    index,
                    t1_us: q.t1_us,
                    t2_us: q.t2_us,
                    prob_meas0_prep1: q.prob_meas0_prep1,
                    prob_meas1_prep0: q.prob_meas1_prep0,
                    gate_error_1q: q.gate_error_1q,
                })
                .collect(),
            pairs,
            default_cx_error: self.default_cx_error,
            durations_ns: DurationRecord {
                single_qubit: self.durations.single_qubit,
                two_qubit: self.durations.two_qubit,
                measure: self.durations.measure,
            },
        };
        toml::to_string(&doc).expect("noise document serializes")
    }

    /// Check that `layout` maps logical qubits injectively onto known physical qubits.
    pub fn check_layout(&self, layout: &[usize], width: usize) -> Result<(), SimError> {
        if layout.len() < width {
            return Err(SimError::Layout(format!("layout has {} entries for {width} qubits", layout.len())));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &p in &layout[..width] {
            self.qubit(p)?;
            if !seen.insert(p) {
                return Err(SimError::Layout(format!("physical qubit {p} used twice")));
            }
        }
        Ok(())
    }
}

/// `ρ → (1−p)ρ + p/3 (XρX + YρY + ZρZ)` on one qubit.
pub(crate) fn depolarize_1q(matrix: &mut Vec<Complex64>, width: usize, qubit: usize, p: f64) {
    if p == 0.0 {
        return;
    }
    let mut acc: Vec<Complex64> = matrix.iter().map(|v| v * (1.0 - p)).collect();
    for pauli in [PAULI_X, PAULI_Y, PAULI_Z] {
        let mut term = matrix.clone();
        QuantumState::conjugate_single(&mut term, width, qubit, &pauli);
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += t * (p / 3.0);
        }
    }
    *matrix = acc;
}

/// `ρ → (1−p)ρ + p/15 Σ_{P ≠ II} PρP` on a qubit pair.
pub(crate) fn depolarize_2q(matrix: &mut Vec<Complex64>, width: usize, a: usize, b: usize, p: f64) {
    if p == 0.0 {
        return;
    }
    const IDENTITY: Mat2 =
        [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    let paulis = [IDENTITY, PAULI_X, PAULI_Y, PAULI_Z];
    let mut acc: Vec<Complex64> = matrix.iter().map(|v| v * (1.0 - p)).collect();
    for (i, pa) in paulis.iter().enumerate() {
        for (j, pb) in paulis.iter().enumerate() {
            if i == 0 && j == 0 {
                continue;
            }
            let mut term = matrix.clone();
            QuantumState::conjugate_single(&mut term, width, a, pa);
            QuantumState::conjugate_single(&mut term, width, b, pb);
            for (x, t) in acc.iter_mut().zip(&term) {
                *x += t * (p / 15.0);
            }
        }
    }
    *matrix = acc;
}

/// Thermal relaxation of one qubit for `duration_ns`: amplitude damping with
/// `γ = 1 − exp(−t/T1)`, then pure dephasing so coherences decay as `exp(−t/T2)` overall.
pub(crate) fn thermal_relax(matrix: &mut [Complex64], width: usize, qubit: usize, q: &QubitNoise, duration_ns: f64) {
    if duration_ns == 0.0 {
        return;
    }
    let t_us = duration_ns * 1e-3;
    let gamma = if q.t1_us.is_finite() { 1.0 - (-t_us / q.t1_us).exp() } else { 0.0 };
    // 1/Tφ = 1/T2 − 1/(2·T1) ≥ 0 because T2 ≤ 2·T1.
    let inv_tphi = (1.0 / q.t2_us - 0.5 / q.t1_us).max(0.0);
    let dephase = (-t_us * inv_tphi).exp();
    if gamma == 0.0 && dephase == 1.0 {
        return;
    }
    let coherence = (1.0 - gamma).sqrt() * dephase;
    let dim = 1usize << width;
    let ket = 1usize << qubit;
    for row in 0..dim {
        for col in 0..dim {
            let (rb, cb) = (row & ket != 0, col & ket != 0);
            match (rb, cb) {
                (false, false) => {
                    let partner = matrix[(row | ket) * dim + (col | ket)];
                    matrix[row * dim + col] += partner * gamma;
                }
                (true, true) => matrix[row * dim + col] *= 1.0 - gamma,
                _ => matrix[row * dim + col] *= coherence,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn table_row_for_qubit_zero() {
        let m = load_noise_model(bundled::GUADALUPE_NOISE).unwrap();
        let q = m.qubit(0).unwrap();
        assert_eq!(q.t1_us, 120.7);
        assert_eq!(q.t2_us, 179.57);
        assert_eq!(q.prob_meas0_prep1, 0.0194);
        assert_eq!(q.prob_meas1_prep0, 0.0066);
        assert_eq!(q.gate_error_1q, 2.222e-4);
        assert_eq!(m.cx_error(0, 1).unwrap(), 9.953e-3);
        assert_eq!(m.cx_error(7, 10).unwrap(), 6.985e-3);
        assert_eq!(m.qubit_indices().count(), 16);
    }

    #[test]
    fn all_zero_document_is_noiseless() {
        let doc = r#"
            [[qubits]]
            index = 0
            t1_us = inf
            t2_us = inf
            prob_meas0_prep1 = 0.0
            prob_meas1_prep0 = 0.0
            gate_error_1q = 0.0
        "#;
        let m = load_noise_model(doc).unwrap();
        assert_eq!(*m.qubit(0).unwrap(), QubitNoise::IDEAL);
        assert_eq!(m.durations(), GateDurations::default());
    }

    #[test]
    fn t2_beyond_twice_t1_is_rejected() {
        let doc = r#"
            [[qubits]]
            index = 3
            t1_us = 10.0
            t2_us = 30.0
            prob_meas0_prep1 = 0.0
            prob_meas1_prep0 = 0.0
            gate_error_1q = 0.0
        "#;
        let err = load_noise_model(doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("qubits[0].t2_us"), "{msg}");
        assert!(msg.contains("exceeds 2·t1"), "{msg}");
    }

    #[test]
    fn one_direction_is_symmetrized() {
        let doc = r#"
            [[qubits]]
            index = 0
            t1_us = 100.0
            t2_us = 100.0
            prob_meas0_prep1 = 0.01
            prob_meas1_prep0 = 0.01
            gate_error_1q = 0.001
            [[qubits]]
            index = 1
            t1_us = 100.0
            t2_us = 100.0
            prob_meas0_prep1 = 0.01
            prob_meas1_prep0 = 0.01
            gate_error_1q = 0.001
            [[pairs]]
            a = 1
            b = 0
            cx_error = 0.02
            [durations_ns]
            two_qubit = 250.0
        "#;
        let m = load_noise_model(doc).unwrap();
        assert_eq!(m.cx_error(0, 1).unwrap(), 0.02);
        assert_eq!(m.durations().two_qubit, 250.0);
        assert_eq!(m.durations().single_qubit, 35.0);
        assert!(matches!(m.cx_error(0, 2), Err(SimError::MissingPair(0, 2))));
        let again = load_noise_model(&m.to_document()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn malformed_documents() {
        assert!(matches!(load_noise_model("qubits = 3"), Err(DocumentError::Parse(_))));
        assert!(matches!(load_noise_model("bogus = 1"), Err(DocumentError::Parse(_))));
        let bad_prob = r#"
            [[qubits]]
            index = 0
            t1_us = 1.0
            t2_us = 1.0
            prob_meas0_prep1 = 1.5
            prob_meas1_prep0 = 0.0
            gate_error_1q = 0.0
        "#;
        let msg = load_noise_model(bad_prob).unwrap_err().to_string();
        assert!(msg.contains("qubits[0].prob_meas0_prep1"), "{msg}");
    }
}
