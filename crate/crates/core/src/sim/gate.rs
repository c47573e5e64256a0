use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SimError;

pub(crate) type Mat2 = [[Complex64; 2]; 2];
/// Two-qubit matrix over the basis index `2·b_first + b_second`.
pub(crate) type Mat4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A single gate from the simulator's instruction set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    /// Real y-rotation `[[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
    RotY {
        qubit: usize,
        angle: f64,
    },
    /// `diag(e^{−iθ/2}, e^{iθ/2})`.
    RotZ {
        qubit: usize,
        angle: f64,
    },
    PauliX {
        qubit: usize,
    },
    CNot {
        control: usize,
        target: usize,
    },
    /// √iSWAP, symmetric in its two qubits.
    SqrtISwap {
        a: usize,
        b: usize,
    },
}

impl Gate {
    pub fn ry(qubit: usize, angle: f64) -> Self {
        Gate::RotY { qubit, angle }
    }

    pub fn rz(qubit: usize, angle: f64) -> Self {
        Gate::RotZ { qubit, angle }
    }

    pub fn x(qubit: usize) -> Self {
        Gate::PauliX { qubit }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::CNot { control, target }
    }

    pub fn sqrt_iswap(a: usize, b: usize) -> Self {
        Gate::SqrtISwap { a, b }
    }

    /// Qubits the gate acts on, first entry is the control for `CNot`.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::RotY { qubit, .. } | Gate::RotZ { qubit, .. } | Gate::PauliX { qubit } => {
                vec![qubit]
            }
            Gate::CNot { control, target } => vec![control, target],
            Gate::SqrtISwap { a, b } => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::CNot { .. } | Gate::SqrtISwap { .. })
    }

    pub fn validate(&self, width: usize) -> Result<(), SimError> {
        let qubits = self.qubits();
        for &q in &qubits {
            if q >= width {
                return Err(SimError::QubitOutOfRange { qubit: q, width });
            }
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(SimError::RepeatedQubit(qubits[0]));
        }
        Ok(())
    }

    /// The inverse gate, as a gate list (√iSWAP† is seven √iSWAP applications).
    pub fn inverse(&self) -> Vec<Gate> {
        match *self {
            Gate::RotY { qubit, angle } => vec![Gate::ry(qubit, -angle)],
            Gate::RotZ { qubit, angle } => vec![Gate::rz(qubit, -angle)],
            g @ (Gate::PauliX { .. } | Gate::CNot { .. }) => vec![g],
            // √iSWAP has order 8 (its square is iSWAP, whose square is Z⊗Z).
            g @ Gate::SqrtISwap { .. } => vec![g; 7],
        }
    }

    /// Remap qubit indices, used when placing logical circuits on a device layout.
    pub fn remapped(&self, map: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::RotY { qubit, angle } => Gate::ry(map(qubit), angle),
            Gate::RotZ { qubit, angle } => Gate::rz(map(qubit), angle),
            Gate::PauliX { qubit } => Gate::x(map(qubit)),
            Gate::CNot { control, target } => Gate::cnot(map(control), map(target)),
            Gate::SqrtISwap { a, b } => Gate::sqrt_iswap(map(a), map(b)),
        }
    }
}

pub(crate) enum GateMatrix {
    Single(usize, Mat2),
    Double(usize, usize, Mat4),
}

pub(crate) fn matrix(gate: &Gate) -> GateMatrix {
    match *gate {
        Gate::RotY { qubit, angle } => {
            let (s, c) = (angle / 2.0).sin_cos();
            let m =
                [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]];
            GateMatrix::Single(qubit, m)
        }
        Gate::RotZ { qubit, angle } => {
            let m = [[Complex64::from_polar(1.0, -angle / 2.0), ZERO], [ZERO, Complex64::from_polar(1.0, angle / 2.0)]];
            GateMatrix::Single(qubit, m)
        }
        Gate::PauliX { qubit } => GateMatrix::Single(qubit, PAULI_X),
        Gate::CNot { control, target } => GateMatrix::Double(
            control,
            target,
            [[ONE, ZERO, ZERO, ZERO], [ZERO, ONE, ZERO, ZERO], [ZERO, ZERO, ZERO, ONE], [ZERO, ZERO, ONE, ZERO]],
        ),
        Gate::SqrtISwap { a, b } => {
            let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
            let ir = I * FRAC_1_SQRT_2;
            GateMatrix::Double(
                a,
                b,
                [[ONE, ZERO, ZERO, ZERO], [ZERO, r, ir, ZERO], [ZERO, ir, r, ZERO], [ZERO, ZERO, ZERO, ONE]],
            )
        }
    }
}

pub(crate) const PAULI_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];
pub(crate) const PAULI_Y: Mat2 = [[ZERO, Complex64::new(0.0, -1.0)], [I, ZERO]];
pub(crate) const PAULI_Z: Mat2 = [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];

pub(crate) fn conj2(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}

pub(crate) fn conj4(m: &Mat4) -> Mat4 {
    let mut out = *m;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v = v.conj();
        }
    }
    out
}

/// Apply a 2×2 matrix to bit `bit` of a flat amplitude vector.
pub(crate) fn apply_mat2(v: &mut [Complex64], bit: usize, m: &Mat2) {
    let stride = 1usize << bit;
    let len = v.len();
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            let j = i + stride;
            let (a, b) = (v[i], v[j]);
            v[i] = m[0][0] * a + m[0][1] * b;
            v[j] = m[1][0] * a + m[1][1] * b;
        }
        base += stride << 1;
    }
}

/// Apply a 4×4 matrix to bits (`first`, `second`) of a flat amplitude vector.
pub(crate) fn apply_mat4(v: &mut [Complex64], first: usize, second: usize, m: &Mat4) {
    let f = 1usize << first;
    let s = 1usize << second;
    for i in 0..v.len() {
        if i & f != 0 || i & s != 0 {
            continue;
        }
        let idx = [i, i | s, i | f, i | f | s];
        let old = [v[idx[0]], v[idx[1]], v[idx[2]], v[idx[3]]];
        for (r, &target) in idx.iter().enumerate() {
            v[target] = m[r][0] * old[0] + m[r][1] * old[1] + m[r][2] * old[2] + m[r][3] * old[3];
        }
    }
}
