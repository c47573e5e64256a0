//! Frenkel-Davydov Hamiltonian in the one-exciton basis, its exact diagonalization,
//! oscillator strengths, and the Davydov splitting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::DocumentError;

/// cm⁻¹ per meV.
pub const MEV_TO_CM1: f64 = 8.06554;

/// Default threshold on `f_i` above which a transition counts as allowed.
pub const DEFAULT_ALLOWED_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExcitonError {
    #[error("molecule index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("molecule {0} coupled to itself")]
    SelfCoupling(usize),
    #[error("pair ({0}, {1}) listed more than once")]
    DuplicatePair(usize, usize),
    #[error("expected {expected} {what}, found {found}")]
    Length { what: &'static str, expected: usize, found: usize },
    #[error("no transition dipoles configured")]
    MissingDipoles,
    #[error("Davydov splitting needs two allowed states, found {0}")]
    DavydovUndefined(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub m: usize,
    pub n: usize,
    pub v_mev: f64,
}

/// Molecules, their transition energies, pairwise couplings and transition dipoles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitonConfig {
    pub n: usize,
    pub onsite_mev: Vec<f64>,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipoles: Option<Vec<[f64; 3]>>,
    /// Shift added to every eigenvalue before computing oscillator strengths.
    #[serde(default)]
    pub energy_offset_mev: f64,
}

impl ExcitonConfig {
    /// Parse an exciton document (TOML) and check its invariants.
    pub fn from_toml(document: &str) -> Result<Self, DocumentError> {
        let cfg: ExcitonConfig = toml::from_str(document).map_err(|e| DocumentError::Parse(e.to_string()))?;
        cfg.validate().map_err(|e| {
            let path = match &e {
                ExcitonError::Length { what: "onsite energies", .. } => "onsite_mev",
                ExcitonError::Length { .. } | ExcitonError::MissingDipoles => "dipoles",
                _ => "couplings",
            };
            DocumentError::invalid(path, e.to_string())
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("exciton config serializes")
    }

    pub fn validate(&self) -> Result<(), ExcitonError> {
        if self.onsite_mev.len() != self.n {
            return Err(ExcitonError::Length {
                what: "onsite energies",
                expected: self.n,
                found: self.onsite_mev.len(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.couplings {
            for index in [c.m, c.n] {
                if index >= self.n {
                    return Err(ExcitonError::IndexOutOfRange { index, n: self.n });
                }
            }
            if c.m == c.n {
                return Err(ExcitonError::SelfCoupling(c.m));
            }
            if !seen.insert((c.m.min(c.n), c.m.max(c.n))) {
                return Err(ExcitonError::DuplicatePair(c.m, c.n));
            }
        }
        if let Some(d) = &self.dipoles {
            if d.len() != self.n {
                return Err(ExcitonError::Length { what: "dipoles", expected: self.n, found: d.len() });
            }
        }
        Ok(())
    }
}

/// Symmetric `n × n` matrix plus the coupling list it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitonHamiltonian {
    n: usize,
    matrix: Vec<f64>,
    onsite: Vec<f64>,
    couplings: Vec<Coupling>,
}

impl ExcitonHamiltonian {
    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn element(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.n + col]
    }

    /// Row-major matrix entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// `cᵀ H c`.
    pub fn quadratic_form(&self, c: &[f64]) -> f64 {
        (0..self.n).map(|r| c[r] * (0..self.n).map(|k| self.element(r, k) * c[k]).sum::<f64>()).sum()
    }

    /// `Σ |V_mn|`.
    pub fn total_coupling(&self) -> f64 {
        self.couplings.iter().map(|c| c.v_mev.abs()).sum()
    }
}

pub fn build_hamiltonian(config: &ExcitonConfig) -> Result<ExcitonHamiltonian, ExcitonError> {
    config.validate()?;
    let n = config.n;
    let mut matrix = vec![0.0; n * n];
    for (m, &omega) in config.onsite_mev.iter().enumerate() {
        matrix[m * n + m] = omega;
    }
    for c in &config.couplings {
        matrix[c.m * n + c.n] = c.v_mev;
        matrix[c.n * n + c.m] = c.v_mev;
    }
    Ok(ExcitonHamiltonian { n, matrix, onsite: config.onsite_mev.clone(), couplings: config.couplings.clone() })
}

/// Ascending eigenvalues (meV) with orthonormal real eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i][m]` is the weight of molecule `m` in state `i`.
    pub eigenvectors: Vec<Vec<f64>>,
}

/// Exact eigendecomposition by cyclic Jacobi rotations.
pub fn diagonalize(h: &ExcitonHamiltonian) -> Result<EigenResult, ExcitonError> {
    let eig = linalg::symmetric_eigen(&h.matrix, h.n)?;
    Ok(EigenResult { eigenvalues: eig.values, eigenvectors: eig.vectors })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSpectrum {
    pub energy_mev: f64,
    pub oscillator_strength: f64,
    pub allowed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DavydovSplitting {
    /// Indices of the two allowed states, lower energy first.
    pub lower: usize,
    pub upper: usize,
    pub mev: f64,
    pub cm1: f64,
}

impl DavydovSplitting {
    pub fn from_energies(lower: usize, upper: usize, energies: &[f64]) -> Self {
        let mev = energies[upper] - energies[lower];
        DavydovSplitting { lower, upper, mev, cm1: mev * MEV_TO_CM1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub states: Vec<StateSpectrum>,
    pub davydov: DavydovSplitting,
}

/// `f_i = ⅔ (E_i + offset) ‖Σ_m C_m^i μ_m‖²` for every state.
pub fn strengths(eig: &EigenResult, config: &ExcitonConfig, energy_offset: f64) -> Result<Vec<f64>, ExcitonError> {
    let dipoles = config.dipoles.as_ref().ok_or(ExcitonError::MissingDipoles)?;
    if dipoles.len() != eig.eigenvalues.len() {
        return Err(ExcitonError::Length { what: "dipoles", expected: eig.eigenvalues.len(), found: dipoles.len() });
    }
    if eig.eigenvalues.iter().any(|e| e + energy_offset <= 0.0) {
        log::warn!("energy offset {energy_offset} meV leaves non-positive excitation energies; f follows their sign");
    }
    Ok(eig
        .eigenvalues
        .iter()
        .zip(&eig.eigenvectors)
        .map(|(e, c)| {
            let mut d = [0.0; 3];
            for (cm, mu) in c.iter().zip(dipoles) {
                for k in 0..3 {
                    d[k] += cm * mu[k];
                }
            }
            2.0 / 3.0 * (e + energy_offset) * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        })
        .collect())
}

/// Oscillator strengths, allowed flags, and the Davydov splitting.
///
/// The splitting is taken between the two allowed states with the largest `f`
/// (for the usual two-sublattice crystal these are the only allowed ones).
pub fn oscillator_strengths(
    eig: &EigenResult,
    config: &ExcitonConfig,
    energy_offset: f64,
    threshold: f64,
) -> Result<SpectrumReport, ExcitonError> {
    let f = strengths(eig, config, energy_offset)?;
    let states: Vec<StateSpectrum> = eig
        .eigenvalues
        .iter()
        .zip(&f)
        .map(|(&energy_mev, &fi)| StateSpectrum { energy_mev, oscillator_strength: fi, allowed: fi > threshold })
        .collect();
    let mut allowed: Vec<usize> = (0..states.len()).filter(|&i| states[i].allowed).collect();
    if allowed.len() < 2 {
        return Err(ExcitonError::DavydovUndefined(allowed.len()));
    }
    allowed.sort_by(|&a, &b| f[b].total_cmp(&f[a]));
    let (a, b) = (allowed[0].min(allowed[1]), allowed[0].max(allowed[1]));
    Ok(SpectrumReport { states, davydov: DavydovSplitting::from_energies(a, b, &eig.eigenvalues) })
}
