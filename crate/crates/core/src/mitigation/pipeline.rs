//! Mitigated energy evaluation: post-selection or the learned map applied to each
//! measurement job, either after optimization (Post-DL) or inside it (DL-VQD).

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reduce::post_select_probabilities;
use super::{split_indices, train_on, Hyperparameters, MitigationError, MitigatorModel, TrainingSample};
use crate::ansatz::{build_ansatz, AnsatzParameters};
use crate::exciton::ExcitonHamiltonian;
use crate::measurement::{self, Backend, JobRecord, MeasurementPlan};
use crate::vqd::{self, EnergyEvaluator, VqdResult, VqdSettings};
use crate::{seed, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Processing {
    Raw,
    PostSelected,
    Learned,
}

/// Per-circuit excitation profiles after processing. `Learned` needs a model whose
/// pair list contains every job pair; the onsite circuit gets an all-zero pair encoding.
pub fn profiles(
    plan: &MeasurementPlan,
    records: &[JobRecord],
    processing: Processing,
    model: Option<&MitigatorModel>,
) -> Result<Vec<Vec<f64>>, MitigationError> {
    let width = plan.width();
    records
        .iter()
        .enumerate()
        .map(|(i, r)| match processing {
            Processing::Raw => Ok(r.excitation(width)),
            Processing::PostSelected => post_select_probabilities(&r.probabilities, width),
            Processing::Learned => {
                let model =
                    model.ok_or_else(|| MitigationError::Settings("learned processing needs a model".into()))?;
                let pair_index = match plan.jobs().get(i) {
                    Some(job) => Some(pair_position(model, job.pair)?),
                    None => None,
                };
                model.mitigate_probabilities(&r.probabilities, pair_index)
            }
        })
        .collect()
}

fn pair_position(model: &MitigatorModel, pair: (usize, usize)) -> Result<usize, MitigationError> {
    model
        .encoding
        .pairs
        .iter()
        .position(|&p| p == pair)
        .ok_or_else(|| MitigationError::Settings(format!("model was not trained on pair ({}, {})", pair.0, pair.1)))
}

/// Energy evaluator that processes every job histogram before combining terms.
pub struct MitigatedEvaluator {
    plan: MeasurementPlan,
    backend: Backend,
    shots: u64,
    processing: Processing,
    model: Option<Arc<MitigatorModel>>,
}

impl MitigatedEvaluator {
    pub fn new(
        h: &ExcitonHamiltonian,
        backend: Backend,
        shots: u64,
        processing: Processing,
        model: Option<Arc<MitigatorModel>>,
    ) -> Result<Self, MitigationError> {
        let plan = MeasurementPlan::new(h);
        if processing == Processing::Learned {
            let m =
                model.as_deref().ok_or_else(|| MitigationError::Settings("learned processing needs a model".into()))?;
            if m.encoding.width != plan.width() {
                return Err(MitigationError::Dimension { expected: plan.width(), found: m.encoding.width });
            }
            for job in plan.jobs() {
                pair_position(m, job.pair)?;
            }
        }
        Ok(MitigatedEvaluator { plan, backend, shots, processing, model })
    }
}

impl EnergyEvaluator for MitigatedEvaluator {
    fn energy(&self, params: &AnsatzParameters, seed: u64) -> Result<f64, Error> {
        let prep = build_ansatz(self.plan.width(), params)?;
        let records = measurement::run_plan(&prep, &self.plan, &self.backend, self.shots, seed)?;
        let p = profiles(&self.plan, &records, self.processing, self.model.as_deref())?;
        Ok(self.plan.combine(&p, self.shots * records.len() as u64)?.value)
    }

    fn is_stochastic(&self) -> bool {
        self.backend.is_stochastic()
    }
}

/// Energies of one VQD state under each processing of the same measured records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateEnergies {
    pub index: usize,
    pub raw: f64,
    pub post_selected: f64,
    /// Present when a model was supplied.
    pub post_dl: Option<f64>,
}

/// Re-measures each state at its final angles once and evaluates the records raw,
/// post-selected and through the model. State `k` uses `seed::derive(seed, k)`.
pub fn post_dl_pipeline(
    vqd_result: &VqdResult,
    model: &MitigatorModel,
    h: &ExcitonHamiltonian,
    shots: u64,
    backend: &Backend,
    seed: u64,
) -> Result<Vec<StateEnergies>, Error> {
    remeasure(vqd_result, Some(model), h, shots, backend, seed)
}

/// [`post_dl_pipeline`] with an optional model; without one only raw and PS are filled.
pub fn remeasure(
    vqd_result: &VqdResult,
    model: Option<&MitigatorModel>,
    h: &ExcitonHamiltonian,
    shots: u64,
    backend: &Backend,
    seed: u64,
) -> Result<Vec<StateEnergies>, Error> {
    let plan = MeasurementPlan::new(h);
    vqd_result
        .states
        .par_iter()
        .map(|state| {
            let prep = build_ansatz(plan.width(), &state.params)?;
            let records = measurement::run_plan(&prep, &plan, backend, shots, seed::derive(seed, state.index as u64))?;
            let energy = |processing| -> Result<f64, Error> {
                let p = profiles(&plan, &records, processing, model)?;
                Ok(plan.combine(&p, 0)?.value)
            };
            Ok(StateEnergies {
                index: state.index,
                raw: energy(Processing::Raw)?,
                post_selected: energy(Processing::PostSelected)?,
                post_dl: model.map(|_| energy(Processing::Learned)).transpose()?,
            })
        })
        .collect()
}

/// VQD where every evaluation is mitigated by the model.
pub fn dl_vqd_pipeline(
    h: &ExcitonHamiltonian,
    model: Arc<MitigatorModel>,
    settings: &VqdSettings,
    backend: Backend,
    shots: u64,
) -> Result<VqdResult, Error> {
    let evaluator = MitigatedEvaluator::new(h, backend, shots, Processing::Learned, Some(model))?;
    vqd::solve_with(h, settings, &evaluator)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningPoint {
    pub size: usize,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub rmse: Vec<f64>,
}

/// Holdout RMSE against training-set size. The test split is fixed across sizes; each
/// size trains on the first `size` of the shuffled remainder (80/20 train/validation),
/// once per seed in `0..seeds`.
pub fn learning_curve(
    samples: &[TrainingSample],
    pairs: &[(usize, usize)],
    sizes: &[usize],
    seeds: u64,
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<Vec<LearningPoint>, MitigationError> {
    if samples.len() < 10 {
        return Err(MitigationError::TooFewSamples(samples.len()));
    }
    let (test, mut rest, val) = split_indices(samples.len(), hyper, seed::derive(seed, 0));
    rest.extend(val);
    rest.sort_unstable();
    let hash = super::dataset_hash(samples);
    let mut points = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if size < 5 || size > rest.len() {
            return Err(MitigationError::Settings(format!(
                "learning-curve size {size} outside 5..={} available samples",
                rest.len()
            )));
        }
        let rmse = (0..seeds.max(1))
            .into_par_iter()
            .map(|s| {
                let run_seed = seed::derive_path(seed, &[size as u64, s]);
                let mut pool = rest.clone();
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                pool.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(run_seed));
                pool.truncate(size);
                let n_val = ((size as f64) * hyper.validation_fraction).round() as usize;
                let (v, t) = pool.split_at(n_val);
                train_on(samples, t, v, &test, pairs, hyper, run_seed, hash.clone()).map(|m| m.training.test_rmse)
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let mean = rmse.iter().sum::<f64>() / rmse.len() as f64;
        let var = rmse.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rmse.len() as f64;
        points.push(LearningPoint { size, mean_rmse: mean, std_rmse: var.sqrt(), rmse });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::exciton::{build_hamiltonian, diagonalize, ExcitonConfig};
    use crate::mitigation::{generate_dataset, train, DatasetSpec};
    use crate::sim::NoiseModel;

    fn anthracene() -> ExcitonHamiltonian {
        build_hamiltonian(&ExcitonConfig::from_toml(bundled::ANTHRACENE5).unwrap()).unwrap()
    }

    fn plan_pairs(h: &ExcitonHamiltonian) -> Vec<(usize, usize)> {
        MeasurementPlan::new(h).jobs().iter().map(|j| j.pair).collect()
    }

    fn noiseless_model(h: &ExcitonHamiltonian) -> MitigatorModel {
        let pairs = plan_pairs(h);
        let spec = DatasetSpec { count: 1000, shots: 8192, pairs: pairs.clone(), seed: 4 };
        let data = generate_dataset(5, &spec, &NoiseModel::noiseless(5), &[0, 1, 2, 3, 4]).unwrap();
        train(&data, &pairs, &Hyperparameters { learning_rate: 1e-3, ..Default::default() }, 5).unwrap()
    }

    #[test]
    fn noiseless_processing_agrees() {
        let h = anthracene();
        let eig = diagonalize(&h).unwrap();
        let model = noiseless_model(&h);
        let plan = MeasurementPlan::new(&h);
        for k in [0, 2, 4] {
            let c: Vec<f64> = eig.eigenvectors[k].clone();
            let amps = crate::ansatz::AmplitudeVector::normalized(c).unwrap();
            let params = crate::ansatz::invert_amplitudes(&amps);
            let prep = build_ansatz(5, &params).unwrap();
            let records = measurement::run_plan(&prep, &plan, &Backend::Sampled, 8192, 7).unwrap();
            let raw = plan.combine(&profiles(&plan, &records, Processing::Raw, None).unwrap(), 0).unwrap().value;
            let ps =
                plan.combine(&profiles(&plan, &records, Processing::PostSelected, None).unwrap(), 0).unwrap().value;
            let dl =
                plan.combine(&profiles(&plan, &records, Processing::Learned, Some(&model)).unwrap(), 0).unwrap().value;
            let exact = eig.eigenvalues[k];
            assert!((raw - exact).abs() < 1.0, "raw {raw} vs {exact}");
            assert_eq!(raw, ps);
            // Network approximation error (~1e-2 per population) dominates shot noise here.
            assert!((dl - exact).abs() < 3.0, "dl {dl} vs {exact}");
        }
    }

    #[test]
    fn learned_needs_known_pairs() {
        let h = anthracene();
        let data = generate_dataset(
            5,
            &DatasetSpec { count: 20, shots: 64, pairs: vec![(0, 1)], seed: 1 },
            &NoiseModel::noiseless(5),
            &[0, 1, 2, 3, 4],
        )
        .unwrap();
        let model = train(&data, &[(0, 1)], &Hyperparameters { epochs: 0, ..Default::default() }, 1).unwrap();
        let err = MitigatedEvaluator::new(&h, Backend::Exact, 0, Processing::Learned, Some(Arc::new(model)));
        assert!(matches!(err, Err(MitigationError::Settings(_))));
        assert!(MitigatedEvaluator::new(&h, Backend::Exact, 0, Processing::Learned, None).is_err());
    }

    #[test]
    fn post_selected_vqd_on_exact_backend_matches_plain() {
        let h = anthracene();
        let settings = VqdSettings { states: Some(2), ..Default::default() };
        let plain = vqd::solve(&h, &settings, Backend::Exact, 0).unwrap();
        let ps = MitigatedEvaluator::new(&h, Backend::Exact, 0, Processing::PostSelected, None).unwrap();
        let mitigated = vqd::solve_with(&h, &settings, &ps).unwrap();
        let exact = diagonalize(&h).unwrap().eigenvalues;
        for (k, (a, b)) in plain.energies().iter().zip(mitigated.energies()).enumerate() {
            assert!((a - exact[k]).abs() < 0.01 && (b - exact[k]).abs() < 0.01, "{a} {b} {}", exact[k]);
        }
    }

    #[test]
    fn learning_curve_shape() {
        let pairs = vec![(0, 1), (1, 2)];
        let spec = DatasetSpec { count: 60, shots: 256, pairs: pairs.clone(), seed: 2 };
        let data = generate_dataset(3, &spec, &NoiseModel::noiseless(3), &[0, 1, 2]).unwrap();
        let hyper = Hyperparameters { epochs: 3, ..Default::default() };
        let curve = learning_curve(&data, &pairs, &[10, 40], 2, &hyper, 3).unwrap();
        assert_eq!(curve.len(), 2);
        assert!(curve.iter().all(|p| p.rmse.len() == 2 && p.mean_rmse.is_finite()));
        assert_eq!(curve, learning_curve(&data, &pairs, &[10, 40], 2, &hyper, 3).unwrap());
        assert!(learning_curve(&data, &pairs, &[100], 1, &hyper, 3).is_err());
    }
}
