use serde::{Deserialize, Serialize};

use super::{Gate, SimError};

/// Ordered gate sequence over a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Circuit { width, gates: Vec::new() }
    }

    pub fn from_gates(width: usize, gates: Vec<Gate>) -> Result<Self, SimError> {
        let mut c = Circuit::new(width);
        c.extend(gates)?;
        Ok(c)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self, SimError> {
        gate.validate(self.width)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<&mut Self, SimError> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    /// This circuit followed by `other`.
    pub fn then(&self, other: &Circuit) -> Result<Circuit, SimError> {
        if other.width != self.width {
            return Err(SimError::WidthMismatch { expected: self.width, found: other.width });
        }
        let mut out = self.clone();
        out.gates.extend_from_slice(&other.gates);
        Ok(out)
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::CNot { .. })).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}
