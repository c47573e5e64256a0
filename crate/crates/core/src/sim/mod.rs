//! Gate-level simulator: exact statevectors, density matrices under device noise, and
//! seeded shot sampling with readout error.

mod circuit;
mod gate;
mod histogram;
mod noise;
mod state;

pub use circuit::Circuit;
pub use gate::Gate;
pub use histogram::ShotHistogram;
pub use noise::{load_noise_model, GateDurations, NoiseModel, QubitNoise};
pub use state::{apply_gate, format_bitstring, parse_bitstring, QuantumState};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit {qubit} out of range for width {width}")]
    QubitOutOfRange { qubit: usize, width: usize },
    #[error("two-qubit gate uses qubit {0} twice")]
    RepeatedQubit(usize),
    #[error("basis index {index} out of range for width {width}")]
    BasisOutOfRange { index: usize, width: usize },
    #[error("size mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("state is not normalized (norm or trace {0})")]
    NotNormalized(f64),
    #[error("operation needs two pure states")]
    ModeMismatch,
    #[error("malformed bitstring {0:?}")]
    BadBitstring(String),
    #[error("physical qubit {0} missing from noise model")]
    UnknownQubit(usize),
    #[error("pair ({0}, {1}) missing from noise model")]
    MissingPair(usize, usize),
    #[error("layout violation: {0}")]
    Layout(String),
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("histogram counts sum to {sum} but shots is {shots}")]
    ShotMismatch { sum: u64, shots: u64 },
    #[error("shot total overflows u64")]
    ShotOverflow,
}

/// Exact statevector of `circuit` applied to the basis state `initial` (e.g. `"00000"`).
pub fn run_pure(circuit: &Circuit, initial: &str) -> Result<QuantumState, SimError> {
    if initial.len() != circuit.width() {
        return Err(SimError::WidthMismatch { expected: circuit.width(), found: initial.len() });
    }
    let mut state = QuantumState::from_bitstring(initial)?;
    for g in circuit.gates() {
        state.apply(g)?;
    }
    Ok(state)
}

/// Like [`run_pure`] from `|0…0⟩`.
pub fn run_pure_zero(circuit: &Circuit) -> Result<QuantumState, SimError> {
    let mut state = QuantumState::basis(circuit.width(), 0)?;
    for g in circuit.gates() {
        state.apply(g)?;
    }
    Ok(state)
}

/// Density-matrix evolution from `|0…0⟩` with noise after every gate.
///
/// Each gate is applied ideally, then depolarized (single-qubit rate `gate_error_1q`, CNOT
/// rate `cx_error` of the physical pair), then its qubits relax thermally for the gate
/// duration. √iSWAP is charged as two CNOTs: error `1 − (1 − cx)²` and twice the
/// two-qubit duration. All qubits relax for the measurement duration at the end.
/// `layout[logical] = physical` selects the noise records.
pub fn run_noisy(circuit: &Circuit, noise: &NoiseModel, layout: &[usize]) -> Result<QuantumState, SimError> {
    let mut state = QuantumState::basis(circuit.width(), 0)?.to_density();
    evolve_noisy(&mut state, circuit, noise, layout)?;
    relax_for_measurement(&mut state, noise, layout)?;
    Ok(state)
}

/// Noisy gate-by-gate evolution of an existing state (converted to density form), without
/// the final measurement-duration relaxation. Lets callers share a noisy prefix between
/// circuits that differ only in their last gates.
pub fn evolve_noisy(
    state: &mut QuantumState,
    circuit: &Circuit,
    noise: &NoiseModel,
    layout: &[usize],
) -> Result<(), SimError> {
    let width = circuit.width();
    if state.width() != width {
        return Err(SimError::WidthMismatch { expected: width, found: state.width() });
    }
    noise.check_layout(layout, width)?;
    if state.is_pure() {
        *state = state.to_density();
    }
    let durations = noise.durations();
    for gate in circuit.gates() {
        state.apply(gate)?;
        let qubits = gate.qubits();
        let (error, duration) = match gate {
            Gate::CNot { control, target } => (noise.cx_error(layout[*control], layout[*target])?, durations.two_qubit),
            Gate::SqrtISwap { a, b } => {
                let cx = noise.cx_error(layout[*a], layout[*b])?;
                (1.0 - (1.0 - cx) * (1.0 - cx), 2.0 * durations.two_qubit)
            }
            _ => (noise.qubit(layout[qubits[0]])?.gate_error_1q, durations.single_qubit),
        };
        let matrix = state.density_mut().expect("density mode");
        if qubits.len() == 2 {
            noise::depolarize_2q(matrix, width, qubits[0], qubits[1], error);
        } else {
            noise::depolarize_1q(matrix, width, qubits[0], error);
        }
        for &q in &qubits {
            noise::thermal_relax(matrix, width, q, noise.qubit(layout[q])?, duration);
        }
    }
    Ok(())
}

/// Thermal relaxation of every qubit for the measurement duration.
pub fn relax_for_measurement(state: &mut QuantumState, noise: &NoiseModel, layout: &[usize]) -> Result<(), SimError> {
    let width = state.width();
    noise.check_layout(layout, width)?;
    if state.is_pure() {
        *state = state.to_density();
    }
    let duration = noise.durations().measure;
    let matrix = state.density_mut().expect("density mode");
    for (q, &phys) in layout.iter().enumerate().take(width) {
        noise::thermal_relax(matrix, width, q, noise.qubit(phys)?, duration);
    }
    Ok(())
}

/// Readout confusion applied to a probability vector: every qubit independently reports
/// 1 for a prepared 0 with `prob_meas1_prep0`, and 0 for a prepared 1 with `prob_meas0_prep1`.
pub fn apply_readout_error(
    probs: &mut [f64],
    width: usize,
    noise: &NoiseModel,
    layout: &[usize],
) -> Result<(), SimError> {
    noise.check_layout(layout, width)?;
    for (q, &phys) in layout.iter().enumerate().take(width) {
        let rec = noise.qubit(phys)?;
        let (p01, p10) = (rec.prob_meas1_prep0, rec.prob_meas0_prep1);
        if p01 == 0.0 && p10 == 0.0 {
            continue;
        }
        let bit = 1usize << q;
        for i in 0..probs.len() {
            if i & bit != 0 {
                continue;
            }
            let (zero, one) = (probs[i], probs[i | bit]);
            probs[i] = (1.0 - p01) * zero + p10 * one;
            probs[i | bit] = p01 * zero + (1.0 - p10) * one;
        }
    }
    Ok(())
}

/// Draw `shots` computational-basis outcomes from the state's diagonal.
///
/// With `readout = Some((noise, layout))` the per-qubit assignment errors of the physical
/// qubits are folded into the outcome distribution before drawing, which is distributed
/// identically to flipping each measured bit independently. The draw is a sequence of
/// conditional binomials over basis states in ascending order, so the same seed always
/// reproduces the same histogram.
pub fn sample(
    state: &QuantumState,
    shots: u64,
    readout: Option<(&NoiseModel, &[usize])>,
    seed: u64,
) -> Result<ShotHistogram, SimError> {
    let probs = state.probabilities();
    sample_probabilities(&probs, state.width(), shots, readout, seed)
}

/// [`sample`] over an explicit probability vector of length `2^width`.
pub fn sample_probabilities(
    probs: &[f64],
    width: usize,
    shots: u64,
    readout: Option<(&NoiseModel, &[usize])>,
    seed: u64,
) -> Result<ShotHistogram, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    if probs.len() != 1usize << width {
        return Err(SimError::WidthMismatch { expected: 1 << width, found: probs.len() });
    }
    let mut p: Vec<f64> = probs.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(SimError::NotNormalized(total));
    }
    p.iter_mut().for_each(|x| *x /= total);
    if let Some((noise, layout)) = readout {
        apply_readout_error(&mut p, width, noise, layout)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = ShotHistogram::new(width);
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (index, &pi) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if pi <= 0.0 {
            continue;
        }
        let count = if index == p.len() - 1 || pi >= mass {
            remaining
        } else {
            let q = (pi / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q).expect("valid binomial parameters").sample(&mut rng)
        };
        if count > 0 {
            hist.record(index, count);
        }
        remaining -= count;
        mass -= pi;
    }
    if remaining > 0 {
        // Only reachable through rounding when the tail mass is ~0.
        let last = p.iter().rposition(|&x| x > 0.0).unwrap_or(0);
        hist.record(last, remaining);
    }
    Ok(hist)
}

#[cfg(test)]
mod tests;
