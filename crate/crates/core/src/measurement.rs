//! Measurement of the exciton Hamiltonian on a prepared state.
//!
//! Each coupling `V_pq` becomes one circuit: the preparation followed by RZ(−π/4) on `p`,
//! RZ(π/4) on `q` and √iSWAP on `(p, q)`. After that rotation
//! `⟨(X_pX_q + Y_pY_q)/2⟩ = ½(⟨Z_p⟩ − ⟨Z_q⟩) = P(q=1) − P(p=1)`.
//! Onsite energies need one extra unrotated circuit: `Σ Ω_m P(m=1)`.
//!
//! Everything downstream works on *excitation profiles*: the probability that each
//! qubit reads 1. Raw marginals, post-selected distributions and the learned mitigator
//! all reduce to a profile, and the energy is linear in it.

use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exciton::ExcitonHamiltonian;
use crate::seed;
use crate::sim::{self, Circuit, Gate, NoiseModel, QuantumState, ShotHistogram, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("job pair uses qubit {0} twice")]
    SameQubit(usize),
    #[error("circuit width {circuit} does not match Hamiltonian rank {hamiltonian}")]
    WidthMismatch { circuit: usize, hamiltonian: usize },
    #[error("backend: {0}")]
    Backend(String),
    #[error("expected {expected} job results, got {found}")]
    ResultCount { expected: usize, found: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One coupling term and the rotation that makes it diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementJob {
    pub pair: (usize, usize),
    pub coefficient: f64,
    pub post_rotation: Vec<Gate>,
}

impl MeasurementJob {
    pub fn new(p: usize, q: usize, coefficient: f64) -> Result<Self, MeasurementError> {
        if p == q {
            return Err(MeasurementError::SameQubit(p));
        }
        let post_rotation = vec![Gate::rz(p, -FRAC_PI_4), Gate::rz(q, FRAC_PI_4), Gate::sqrt_iswap(p, q)];
        Ok(MeasurementJob { pair: (p, q), coefficient, post_rotation })
    }

    /// `preparation` followed by this job's rotation.
    pub fn circuit(&self, preparation: &Circuit) -> Result<Circuit, MeasurementError> {
        let mut c = preparation.clone();
        c.extend(self.post_rotation.iter().copied())?;
        Ok(c)
    }

    /// Term value from an excitation profile: `V · (P(q=1) − P(p=1))`.
    pub fn value(&self, excitation: &[f64]) -> f64 {
        self.coefficient * (excitation[self.pair.1] - excitation[self.pair.0])
    }
}

/// One job per coupling, in the Hamiltonian's coupling order. Jordan-Wigner strings
/// between `p` and `q` are dropped: on one-exciton states every qubit between them is 0.
pub fn compile_jobs(h: &ExcitonHamiltonian) -> Vec<MeasurementJob> {
    h.couplings()
        .iter()
        .map(|c| MeasurementJob::new(c.m, c.n, c.v_mev).expect("hamiltonian has no self couplings"))
        .collect()
}

/// Coupling jobs plus the optional onsite (unrotated) circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    width: usize,
    jobs: Vec<MeasurementJob>,
    onsite: Option<Vec<f64>>,
}

impl MeasurementPlan {
    pub fn new(h: &ExcitonHamiltonian) -> Self {
        let onsite = h.onsite().iter().any(|&o| o != 0.0).then(|| h.onsite().to_vec());
        MeasurementPlan { width: h.rank(), jobs: compile_jobs(h), onsite }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn jobs(&self) -> &[MeasurementJob] {
        &self.jobs
    }

    pub fn onsite(&self) -> Option<&[f64]> {
        self.onsite.as_deref()
    }

    /// Number of circuits executed per energy evaluation.
    pub fn circuit_count(&self) -> usize {
        self.jobs.len() + usize::from(self.onsite.is_some())
    }

    /// Post-rotation gates of circuit `index` (empty for the onsite circuit).
    pub fn post_rotation(&self, index: usize) -> &[Gate] {
        self.jobs.get(index).map_or(&[], |j| j.post_rotation.as_slice())
    }

    /// Energy from one excitation profile per circuit, summed in plan order.
    pub fn combine(&self, profiles: &[Vec<f64>], shots_used: u64) -> Result<EnergyEstimate, MeasurementError> {
        if profiles.len() != self.circuit_count() {
            return Err(MeasurementError::ResultCount { expected: self.circuit_count(), found: profiles.len() });
        }
        let mut terms: Vec<TermContribution> = self
            .jobs
            .iter()
            .zip(profiles)
            .map(|(j, p)| TermContribution { pair: Some(j.pair), coefficient: j.coefficient, value: j.value(p) })
            .collect();
        if let Some(onsite) = &self.onsite {
            let p = &profiles[self.jobs.len()];
            terms.push(TermContribution { pair: None, coefficient: 1.0, value: diagonal_value(onsite, p) });
        }
        let value = terms.iter().map(|t| t.value).sum();
        Ok(EnergyEstimate { value, shots_used, std_error: 0.0, terms })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermContribution {
    /// `None` for the onsite term.
    pub pair: Option<(usize, usize)>,
    pub coefficient: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    /// meV; the sum of `terms`.
    pub value: f64,
    pub shots_used: u64,
    /// Binomial standard error of `value` (0 for exact evaluation).
    pub std_error: f64,
    pub terms: Vec<TermContribution>,
}

/// `P(qubit m reads 1)` for each qubit.
pub fn excitation_profile(probs: &[f64], width: usize) -> Vec<f64> {
    let mut e = vec![0.0; width];
    for (i, &p) in probs.iter().enumerate() {
        for (m, em) in e.iter_mut().enumerate() {
            if i >> m & 1 == 1 {
                *em += p;
            }
        }
    }
    e
}

pub fn diagonal_value(onsite: &[f64], excitation: &[f64]) -> f64 {
    onsite.iter().zip(excitation).map(|(o, e)| o * e).sum()
}

/// One coupling term from a histogram measured after `job.post_rotation`:
/// `V · ½(⟨Z_p⟩ − ⟨Z_q⟩)` with `⟨Z⟩` the ±1 frequency average.
pub fn estimate_term(histogram: &ShotHistogram, job: &MeasurementJob) -> Result<f64, MeasurementError> {
    if histogram.is_empty() {
        return Err(MeasurementError::EmptyHistogram);
    }
    let width = histogram.width();
    if job.pair.0.max(job.pair.1) >= width {
        return Err(SimError::QubitOutOfRange { qubit: job.pair.0.max(job.pair.1), width }.into());
    }
    Ok(job.value(&excitation_profile(&histogram.frequencies(), width)))
}

/// Where circuits run.
#[derive(Debug, Clone)]
pub enum Backend {
    /// Noiseless, infinite shots.
    Exact,
    /// Noiseless, finite shots.
    Sampled,
    /// Density-matrix noise, readout error and finite shots. `layout[logical] = physical`.
    Noisy { noise: Arc<NoiseModel>, layout: Vec<usize> },
}

impl Backend {
    pub fn noisy(noise: NoiseModel, layout: Vec<usize>) -> Self {
        Backend::Noisy { noise: Arc::new(noise), layout }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Backend::Exact)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Sampled => "sampled",
            Backend::Noisy { .. } => "noisy",
        }
    }
}

/// Outcome of one measurement circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    /// Exact outcome distribution for `Exact`, shot frequencies otherwise.
    pub probabilities: Vec<f64>,
    pub histogram: Option<ShotHistogram>,
}

impl JobRecord {
    pub fn excitation(&self, width: usize) -> Vec<f64> {
        excitation_profile(&self.probabilities, width)
    }
}

/// Runs every circuit of `plan` after `preparation`. Circuit `i` samples with the seed
/// `seed::derive(seed, i)`, so results do not depend on scheduling.
pub fn run_plan(
    preparation: &Circuit,
    plan: &MeasurementPlan,
    backend: &Backend,
    shots: u64,
    seed: u64,
) -> Result<Vec<JobRecord>, MeasurementError> {
    let width = plan.width();
    if preparation.width() != width {
        return Err(MeasurementError::WidthMismatch { circuit: preparation.width(), hamiltonian: width });
    }
    if backend.is_stochastic() && shots == 0 {
        return Err(SimError::ZeroShots.into());
    }
    let prepared = match backend {
        Backend::Exact | Backend::Sampled => sim::run_pure_zero(preparation)?,
        Backend::Noisy { noise, layout } => {
            if layout.len() != width {
                return Err(MeasurementError::Backend(format!(
                    "layout has {} qubits, circuit has {width}",
                    layout.len()
                )));
            }
            let mut state = QuantumState::basis(width, 0)?.to_density();
            sim::evolve_noisy(&mut state, preparation, noise, layout)?;
            state
        }
    };
    (0..plan.circuit_count())
        .into_par_iter()
        .map(|i| {
            let tail = Circuit::from_gates(width, plan.post_rotation(i).to_vec())?;
            let mut state = prepared.clone();
            match backend {
                Backend::Noisy { noise, layout } => sim::evolve_noisy(&mut state, &tail, noise, layout)?,
                _ => {
                    for g in tail.gates() {
                        state.apply(g)?;
                    }
                }
            }
            let job_seed = seed::derive(seed, i as u64);
            Ok(match backend {
                Backend::Exact => JobRecord { probabilities: state.probabilities(), histogram: None },
                Backend::Sampled => {
                    let h = sim::sample(&state, shots, None, job_seed)?;
                    JobRecord { probabilities: h.frequencies(), histogram: Some(h) }
                }
                Backend::Noisy { noise, layout } => {
                    sim::relax_for_measurement(&mut state, noise, layout)?;
                    let h = sim::sample(&state, shots, Some((noise, layout)), job_seed)?;
                    JobRecord { probabilities: h.frequencies(), histogram: Some(h) }
                }
            })
        })
        .collect()
}

/// Raw energy estimate (no mitigation).
pub fn estimate_energy(
    preparation: &Circuit,
    h: &ExcitonHamiltonian,
    shots: u64,
    backend: &Backend,
    seed: u64,
) -> Result<EnergyEstimate, MeasurementError> {
    let plan = MeasurementPlan::new(h);
    let records = run_plan(preparation, &plan, backend, shots, seed)?;
    estimate_from_records(&plan, &records, backend.is_stochastic().then_some(shots))
}

/// Raw estimate from already measured records, with its binomial standard error.
pub fn estimate_from_records(
    plan: &MeasurementPlan,
    records: &[JobRecord],
    shots: Option<u64>,
) -> Result<EnergyEstimate, MeasurementError> {
    let width = plan.width();
    let profiles: Vec<Vec<f64>> = records.iter().map(|r| r.excitation(width)).collect();
    let used = shots.unwrap_or(0) * records.len() as u64;
    let mut estimate = plan.combine(&profiles, used)?;
    if let Some(n) = shots {
        let mut variance = 0.0;
        for (i, r) in records.iter().enumerate() {
            // Per-shot observable as a function of the outcome index.
            let observable = |k: usize| -> f64 {
                match plan.jobs.get(i) {
                    Some(j) => j.coefficient * ((k >> j.pair.1 & 1) as f64 - (k >> j.pair.0 & 1) as f64),
                    None => {
                        let onsite = plan.onsite.as_ref().expect("onsite circuit");
                        (0..width).filter(|m| k >> m & 1 == 1).map(|m| onsite[m]).sum()
                    }
                }
            };
            let (mut m1, mut m2) = (0.0, 0.0);
            for (k, &p) in r.probabilities.iter().enumerate() {
                let o = observable(k);
                m1 += p * o;
                m2 += p * o * o;
            }
            variance += (m2 - m1 * m1).max(0.0) / n as f64;
        }
        estimate.std_error = variance.sqrt();
    }
    Ok(estimate)
}
