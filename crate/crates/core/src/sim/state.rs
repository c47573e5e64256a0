use num_complex::Complex64;

use super::gate::{apply_mat2, apply_mat4, conj2, conj4, matrix, GateMatrix, Mat2};
use super::{Gate, SimError};
use crate::linalg;

/// Simulation state: either a statevector or a density matrix over `2^width` levels.
///
/// Basis index bit `q` is qubit `q`, so the bitstring `"00001"` (index 1) has qubit 0 set.
/// The density matrix is stored row-major; flat index `(row << width) | col`, which lets
/// the same kernels act on the ket half (bits `width..2·width`) and the bra half.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure { width: usize, amplitudes: Vec<Complex64> },
    Density { width: usize, matrix: Vec<Complex64> },
}

impl QuantumState {
    /// Computational basis state `|index⟩`.
    pub fn basis(width: usize, index: usize) -> Result<Self, SimError> {
        let dim = 1usize << width;
        if index >= dim {
            return Err(SimError::BasisOutOfRange { index, width });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(QuantumState::Pure { width, amplitudes })
    }

    /// Parse a bitstring such as `"00001"` (rightmost character is qubit 0).
    pub fn from_bitstring(bits: &str) -> Result<Self, SimError> {
        let index = parse_bitstring(bits)?;
        Self::basis(bits.len(), index)
    }

    pub fn from_amplitudes(width: usize, amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        if amplitudes.len() != 1usize << width {
            return Err(SimError::WidthMismatch { expected: 1 << width, found: amplitudes.len() });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(QuantumState::Pure { width, amplitudes })
    }

    pub fn from_density(width: usize, matrix: Vec<Complex64>) -> Result<Self, SimError> {
        let dim = 1usize << width;
        if matrix.len() != dim * dim {
            return Err(SimError::WidthMismatch { expected: dim * dim, found: matrix.len() });
        }
        let state = QuantumState::Density { width, matrix };
        let tr = state.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(SimError::NotNormalized(tr));
        }
        Ok(state)
    }

    pub fn width(&self) -> usize {
        match self {
            QuantumState::Pure { width, .. } | QuantumState::Density { width, .. } => *width,
        }
    }

    pub fn dim(&self) -> usize {
        1usize << self.width()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure { .. })
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        match self {
            QuantumState::Pure { amplitudes, .. } => Some(amplitudes),
            QuantumState::Density { .. } => None,
        }
    }

    pub fn density_matrix(&self) -> Option<&[Complex64]> {
        match self {
            QuantumState::Density { matrix, .. } => Some(matrix),
            QuantumState::Pure { .. } => None,
        }
    }

    pub(crate) fn density_mut(&mut self) -> Option<&mut Vec<Complex64>> {
        match self {
            QuantumState::Density { matrix, .. } => Some(matrix),
            QuantumState::Pure { .. } => None,
        }
    }

    /// Density element `ρ[row][col]`; for pure states `a_row · conj(a_col)`.
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        match self {
            QuantumState::Pure { amplitudes, .. } => amplitudes[row] * amplitudes[col].conj(),
            QuantumState::Density { matrix, .. } => matrix[row * self.dim() + col],
        }
    }

    /// Computational-basis probabilities (diagonal of the density matrix).
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure { amplitudes, .. } => amplitudes.iter().map(|a| a.norm_sqr()).collect(),
            QuantumState::Density { matrix, .. } => {
                let dim = self.dim();
                (0..dim).map(|i| matrix[i * dim + i].re).collect()
            }
        }
    }

    pub fn trace(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    pub fn to_density(&self) -> QuantumState {
        match self {
            QuantumState::Density { .. } => self.clone(),
            QuantumState::Pure { width, amplitudes } => {
                let dim = amplitudes.len();
                let mut matrix = Vec::with_capacity(dim * dim);
                for r in 0..dim {
                    for c in 0..dim {
                        matrix.push(amplitudes[r] * amplitudes[c].conj());
                    }
                }
                QuantumState::Density { width: *width, matrix }
            }
        }
    }

    /// `⟨self|other⟩` for two pure states.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64, SimError> {
        match (self, other) {
            (QuantumState::Pure { amplitudes: a, .. }, QuantumState::Pure { amplitudes: b, .. }) => {
                if a.len() != b.len() {
                    return Err(SimError::WidthMismatch { expected: a.len(), found: b.len() });
                }
                Ok(a.iter().zip(b).map(|(x, y)| x.conj() * y).sum())
            }
            _ => Err(SimError::ModeMismatch),
        }
    }

    /// Largest `|ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.element(r, c) - self.element(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the (Hermitian part of the) density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.dim();
        // Real symmetric embedding [[A, −B], [B, A]] of A + iB doubles every eigenvalue.
        let n2 = 2 * dim;
        let mut m = vec![0.0; n2 * n2];
        for r in 0..dim {
            for c in 0..dim {
                let z = (self.element(r, c) + self.element(c, r).conj()) * 0.5;
                m[r * n2 + c] = z.re;
                m[(r + dim) * n2 + c + dim] = z.re;
                m[(r + dim) * n2 + c] = z.im;
                m[r * n2 + c + dim] = -z.im;
            }
        }
        let eig = linalg::symmetric_eigen(&m, n2).expect("jacobi converges on small hermitian input");
        eig.values[0]
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.validate(self.width())?;
        let width = self.width();
        match (self, matrix(gate)) {
            (QuantumState::Pure { amplitudes, .. }, GateMatrix::Single(q, m)) => apply_mat2(amplitudes, q, &m),
            (QuantumState::Pure { amplitudes, .. }, GateMatrix::Double(a, b, m)) => apply_mat4(amplitudes, a, b, &m),
            (QuantumState::Density { matrix, .. }, GateMatrix::Single(q, m)) => {
                apply_mat2(matrix, q + width, &m);
                apply_mat2(matrix, q, &conj2(&m));
            }
            (QuantumState::Density { matrix, .. }, GateMatrix::Double(a, b, m)) => {
                apply_mat4(matrix, a + width, b + width, &m);
                apply_mat4(matrix, a, b, &conj4(&m));
            }
        }
        Ok(())
    }

    /// `ρ → K ρ K†` for a single-qubit operator (density mode only; no-op check elsewhere).
    pub(crate) fn conjugate_single(matrix: &mut [Complex64], width: usize, qubit: usize, k: &Mat2) {
        apply_mat2(matrix, qubit + width, k);
        apply_mat2(matrix, qubit, &conj2(k));
    }
}

/// Apply `gate`, returning the new state.
pub fn apply_gate(state: &QuantumState, gate: &Gate) -> Result<QuantumState, SimError> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

pub fn parse_bitstring(bits: &str) -> Result<usize, SimError> {
    if bits.is_empty() || bits.len() > 30 {
        return Err(SimError::BadBitstring(bits.to_string()));
    }
    let mut index = 0usize;
    for ch in bits.chars() {
        index <<= 1;
        match ch {
            '0' => {}
            '1' => index |= 1,
            _ => return Err(SimError::BadBitstring(bits.to_string())),
        }
    }
    Ok(index)
}

pub fn format_bitstring(index: usize, width: usize) -> String {
    (0..width).rev().map(|q| if index >> q & 1 == 1 { '1' } else { '0' }).collect()
}
