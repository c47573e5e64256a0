//! Run reports. Error fields are always recomputed from the stored energies.

use std::collections::BTreeMap;

use frenkel_core::exciton::{DavydovSplitting, StateSpectrum, MEV_TO_CM1};
use frenkel_core::mitigation::LearningPoint;
use serde::{Deserialize, Serialize};

pub const REPORT_FORMAT: &str = "frenkel-run-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSection {
    pub eigenvalues_mev: Vec<f64>,
    /// Absent when the exciton document has no dipoles.
    pub spectrum: Option<Vec<StateSpectrum>>,
    pub davydov: Option<DavydovSplitting>,
    /// Why the oscillator section is missing, if it is.
    pub unavailable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub mev: f64,
    pub cm1: f64,
    pub error_cm1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub name: String,
    pub energies_mev: Vec<f64>,
    pub abs_errors_mev: Vec<f64>,
    pub mean_abs_error_mev: f64,
    pub davydov: Option<Splitting>,
}

impl MethodResult {
    /// `energies[k]` estimates `exact.eigenvalues_mev[k]`.
    pub fn new(name: &str, energies: Vec<f64>, exact: &ExactSection) -> Self {
        let abs_errors: Vec<f64> = energies.iter().zip(&exact.eigenvalues_mev).map(|(e, x)| (e - x).abs()).collect();
        let mean = if abs_errors.is_empty() { 0.0 } else { abs_errors.iter().sum::<f64>() / abs_errors.len() as f64 };
        let davydov = exact.davydov.and_then(|d| {
            let (lo, hi) = (energies.get(d.lower)?, energies.get(d.upper)?);
            let mev = hi - lo;
            Some(Splitting { mev, cm1: mev * MEV_TO_CM1, error_cm1: mev * MEV_TO_CM1 - d.cm1 })
        });
        MethodResult {
            name: name.into(),
            energies_mev: energies,
            abs_errors_mev: abs_errors,
            mean_abs_error_mev: mean,
            davydov,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqdSummary {
    pub backend: String,
    pub shots: u64,
    pub converged: bool,
    pub evaluations: Vec<usize>,
    /// Noiseless energy at the optimized angles.
    pub ideal_energies_mev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurveRow {
    pub activation: String,
    #[serde(flatten)]
    pub point: LearningPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub samples: usize,
    pub shots: u64,
    pub test_rmse: f64,
    pub test_mae: f64,
    pub final_train_loss: Option<f64>,
    pub final_validation_loss: Option<f64>,
    pub dataset_hash: String,
    pub model_hash: String,
    pub learning_curve: Option<Vec<LearningCurveRow>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub message: Option<String>,
}

/// Soft comparison logged in the report; never changes the exit code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    /// SHA-256 of each persisted input document.
    pub inputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub command: String,
    pub exact: ExactSection,
    pub methods: Vec<MethodResult>,
    pub vqd: Option<VqdSummary>,
    pub training: Option<TrainingSummary>,
    pub stages: Vec<StageRecord>,
    pub checks: Vec<Check>,
    /// Persisted intermediates, relative to the output directory.
    pub files: BTreeMap<String, String>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn new(command: &str, exact: ExactSection, provenance: Provenance) -> Self {
        RunReport {
            format: REPORT_FORMAT.into(),
            command: command.into(),
            exact,
            methods: Vec::new(),
            vqd: None,
            training: None,
            stages: Vec::new(),
            checks: Vec::new(),
            files: BTreeMap::new(),
            provenance,
        }
    }

    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn stage(&mut self, name: &str, status: StageStatus, message: Option<String>) {
        self.stages.push(StageRecord { name: name.into(), status, message });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact() -> ExactSection {
        ExactSection {
            eigenvalues_mev: vec![-2.0, 0.0, 3.0],
            spectrum: None,
            davydov: Some(DavydovSplitting::from_energies(0, 2, &[-2.0, 0.0, 3.0])),
            unavailable: None,
        }
    }

    #[test]
    fn errors_are_recomputed() {
        let m = MethodResult::new("raw", vec![-1.5, 0.25, 2.0], &exact());
        assert_eq!(m.abs_errors_mev, vec![0.5, 0.25, 1.0]);
        assert!((m.mean_abs_error_mev - 1.75 / 3.0).abs() < 1e-15);
        let d = m.davydov.unwrap();
        assert_eq!(d.mev, 3.5);
        assert!((d.error_cm1 - (-1.5 * MEV_TO_CM1)).abs() < 1e-12);
    }

    #[test]
    fn partial_states_skip_splitting() {
        let m = MethodResult::new("vqd", vec![-2.0], &exact());
        assert_eq!(m.abs_errors_mev, vec![0.0]);
        assert!(m.davydov.is_none());
    }

    #[test]
    fn json_round_trip() {
        let p = Provenance { config_hash: "ab".into(), seed: 1, versions: BTreeMap::new(), inputs: BTreeMap::new() };
        let mut r = RunReport::new("exact", exact(), p);
        r.methods.push(MethodResult::new("raw", vec![-1.0, 0.0, 3.0], &r.exact));
        r.stage("exact", StageStatus::Ok, None);
        assert_eq!(RunReport::from_json(&r.to_json()).unwrap(), r);
    }
}
