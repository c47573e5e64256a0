//! Frenkel-Davydov exciton Hamiltonians solved by variational quantum deflation on a
//! simulated noisy quantum computer, with post-selection and learned error mitigation.
//!
//! Module map:
//! - [`sim`]: statevector / density-matrix simulator, device noise, shot sampling
//! - [`exciton`]: Hamiltonian construction, Jacobi diagonalization, oscillator strengths
//! - [`ansatz`]: one-exciton ansatz circuit and its closed-form amplitude map
//! - [`measurement`]: per-coupling measurement circuits and energy estimation
//! - [`optimize`] / [`vqd`]: derivative-free minimizers and the deflation loop
//! - [`mitigation`]: post-selection, Hamming-distance reduction, the feed-forward mitigator

pub mod ansatz;
pub mod bundled;
pub mod exciton;
pub mod linalg;
pub mod measurement;
pub mod mitigation;
pub mod optimize;
pub mod seed;
pub mod sim;
pub mod vqd;

/// Library version, recorded in run provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

use thiserror::Error;

/// Failure to read one of the structured text documents (noise model, exciton config,
/// mitigator model, dataset). `Invalid` carries the offending field path.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DocumentError {
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl DocumentError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        DocumentError::Invalid { path: path.into(), message: message.into() }
    }
}

/// Any failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Exciton(#[from] exciton::ExcitonError),
    #[error(transparent)]
    Ansatz(#[from] ansatz::AnsatzError),
    #[error(transparent)]
    Measurement(#[from] measurement::MeasurementError),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Mitigation(#[from] mitigation::MitigationError),
}
