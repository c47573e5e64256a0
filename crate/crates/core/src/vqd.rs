//! Variational quantum deflation.
//!
//! State `k` minimizes `E(θ) + Σ_{i<k} w_i |⟨ψ(θ)|ψ_i⟩|²` with the overlaps computed from
//! the closed-form ansatz amplitudes. States are solved in ascending order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{amplitude_map, build_ansatz, overlap, AnsatzParameters};
use crate::exciton::ExcitonHamiltonian;
use crate::measurement::{self, Backend, MeasurementPlan};
use crate::optimize::{Cobyla, MinimizeOptions, Minimizer, NelderMead};
use crate::{seed, Error};

/// Seed stream labels below the per-state seed.
const STREAM_INIT: u64 = 1 << 32;
const STREAM_FINAL: u64 = (1 << 32) + 1;
const STREAM_SELECT: u64 = (1 << 32) + 2;

/// Energy of the ansatz state at given angles, in meV.
pub trait EnergyEvaluator: Sync {
    fn energy(&self, params: &AnsatzParameters, seed: u64) -> Result<f64, Error>;

    /// Whether repeated calls with different seeds give different values.
    fn is_stochastic(&self) -> bool;
}

/// Unmitigated measurement on a backend.
pub struct RawEvaluator {
    plan: MeasurementPlan,
    backend: Backend,
    shots: u64,
}

impl RawEvaluator {
    pub fn new(h: &ExcitonHamiltonian, backend: Backend, shots: u64) -> Self {
        RawEvaluator { plan: MeasurementPlan::new(h), backend, shots }
    }
}

impl EnergyEvaluator for RawEvaluator {
    fn energy(&self, params: &AnsatzParameters, seed: u64) -> Result<f64, Error> {
        let prep = build_ansatz(self.plan.width(), params)?;
        let records = measurement::run_plan(&prep, &self.plan, &self.backend, self.shots, seed)?;
        let shots = self.backend.is_stochastic().then_some(self.shots);
        Ok(measurement::estimate_from_records(&self.plan, &records, shots)?.value)
    }

    fn is_stochastic(&self) -> bool {
        self.backend.is_stochastic()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Cobyla,
    NelderMead,
}

impl OptimizerKind {
    pub fn minimizer(self) -> Box<dyn Minimizer> {
        match self {
            OptimizerKind::Cobyla => Box::new(Cobyla),
            OptimizerKind::NelderMead => Box::new(NelderMead),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    pub kind: OptimizerKind,
    #[serde(flatten)]
    pub options: MinimizeOptions,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings { kind: OptimizerKind::Cobyla, options: MinimizeOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqdSettings {
    /// One weight per deflated state (meV); `None` uses [`default_penalty`] for all.
    pub penalty_weights: Option<Vec<f64>>,
    pub optimizer: OptimizerSettings,
    pub restarts: usize,
    /// Initial angles are drawn uniformly from `[−init_range, init_range]`.
    pub init_range: f64,
    /// With a stochastic evaluator, each restart's final point is re-evaluated this many
    /// times and the restart with the lowest mean cost wins (0 selects by the noisy minimum).
    pub selection_evals: usize,
    pub seed: u64,
    /// Number of states to solve; `None` solves all of them.
    pub states: Option<usize>,
}

impl Default for VqdSettings {
    fn default() -> Self {
        VqdSettings {
            penalty_weights: None,
            optimizer: OptimizerSettings::default(),
            restarts: 3,
            init_range: std::f64::consts::FRAC_PI_4,
            selection_evals: 4,
            seed: 0,
            states: None,
        }
    }
}

/// `1.25 · (2·Σ|V_mn| + onsite spread)`.
///
/// The bracket bounds the spectral width from above but is attained for a dimer, where a
/// weight equal to the width makes the excited-state cost flat. The factor keeps it strict.
pub fn default_penalty(h: &ExcitonHamiltonian) -> f64 {
    let onsite = h.onsite();
    let spread =
        onsite.iter().copied().fold(f64::NEG_INFINITY, f64::max) - onsite.iter().copied().fold(f64::INFINITY, f64::min);
    let w = 1.25 * (2.0 * h.total_coupling() + spread.max(0.0));
    if w > 0.0 {
        w
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostValue {
    pub cost: f64,
    pub energy: f64,
    pub penalty: f64,
}

/// Deflated cost: energy plus weighted overlaps with `priors`.
pub fn cost(
    evaluator: &dyn EnergyEvaluator,
    params: &AnsatzParameters,
    priors: &[AnsatzParameters],
    weights: &[f64],
    seed: u64,
) -> Result<CostValue, Error> {
    let energy = evaluator.energy(params, seed)?;
    let mut penalty = 0.0;
    for (prior, w) in priors.iter().zip(weights) {
        penalty += w * overlap(params, prior)?;
    }
    Ok(CostValue { cost: energy + penalty, energy, penalty })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub state_index: usize,
    pub eval_index: usize,
    #[serde(rename = "cost_meV")]
    pub cost_mev: f64,
    #[serde(rename = "energy_meV")]
    pub energy_mev: f64,
    #[serde(rename = "overlap_penalty_meV")]
    pub overlap_penalty_mev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateResult {
    pub index: usize,
    pub params: AnsatzParameters,
    /// Estimated energy at `params` (a fresh evaluation for stochastic evaluators).
    pub energy: f64,
    /// Noiseless energy of the state at `params`.
    pub ideal_energy: f64,
    /// `|⟨ψ|ψ_i⟩|²` for every earlier state.
    pub overlaps: Vec<f64>,
    pub best_cost: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqdResult {
    pub states: Vec<StateResult>,
    pub trace: Vec<TraceRow>,
}

impl VqdResult {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }

    pub fn converged(&self) -> bool {
        self.states.iter().all(|s| s.converged)
    }

    pub fn params(&self) -> Vec<AnsatzParameters> {
        self.states.iter().map(|s| s.params.clone()).collect()
    }
}

/// Unmitigated VQD on `backend`.
pub fn solve(h: &ExcitonHamiltonian, settings: &VqdSettings, backend: Backend, shots: u64) -> Result<VqdResult, Error> {
    solve_with(h, settings, &RawEvaluator::new(h, backend, shots))
}

struct RestartOutcome {
    params: Vec<f64>,
    cost: f64,
    /// Selection key: `cost`, or the re-evaluated mean for stochastic evaluators.
    rank: f64,
    evals: usize,
    converged: bool,
    trace: Vec<CostValue>,
}

/// VQD with any energy evaluator (raw, post-selected, learned).
pub fn solve_with(
    h: &ExcitonHamiltonian,
    settings: &VqdSettings,
    evaluator: &dyn EnergyEvaluator,
) -> Result<VqdResult, Error> {
    let n = h.rank();
    if n < 2 {
        return Err(crate::ansatz::AnsatzError::TooFewQubits(n).into());
    }
    let count = settings.states.unwrap_or(n).min(n);
    let weights = match &settings.penalty_weights {
        Some(w) if w.len() + 1 >= count => w.clone(),
        Some(w) => return Err(Error::Settings(format!("{} penalty weights for {count} states", w.len()))),
        None => vec![default_penalty(h); count.saturating_sub(1)],
    };
    let restarts = settings.restarts.max(1);
    let minimizer = settings.optimizer.kind.minimizer();
    let mut states: Vec<StateResult> = Vec::with_capacity(count);
    let mut trace = Vec::new();

    for k in 0..count {
        let priors: Vec<AnsatzParameters> = states.iter().map(|s| s.params.clone()).collect();
        let state_seed = seed::derive(settings.seed, k as u64);
        let outcomes: Vec<Result<RestartOutcome, Error>> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let restart_seed = seed::derive(state_seed, r as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(restart_seed, STREAM_INIT));
                let x0: Vec<f64> =
                    (0..n - 1).map(|_| rng.random_range(-settings.init_range..=settings.init_range)).collect();
                let mut failure: Option<Error> = None;
                let mut rows = Vec::new();
                let mut objective = |x: &[f64]| -> f64 {
                    let eval_seed = seed::derive(restart_seed, rows.len() as u64);
                    match cost(evaluator, &AnsatzParameters::new(x.to_vec()), &priors, &weights, eval_seed) {
                        Ok(c) => {
                            rows.push(c);
                            c.cost
                        }
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    }
                };
                let out = minimizer.minimize(&mut objective, &x0, &settings.optimizer.options);
                if let Some(e) = failure {
                    return Err(e);
                }
                // The noisy minimum favours lucky draws; rank restarts by a fresh mean instead.
                let mut rank = out.f;
                let mut evals = out.evals;
                if evaluator.is_stochastic() && settings.selection_evals > 0 {
                    let p = AnsatzParameters::new(out.x.clone());
                    let mut total = 0.0;
                    for j in 0..settings.selection_evals {
                        let s = seed::derive(restart_seed, STREAM_SELECT + j as u64);
                        total += cost(evaluator, &p, &priors, &weights, s)?.cost;
                    }
                    rank = total / settings.selection_evals as f64;
                    evals += settings.selection_evals;
                }
                Ok(RestartOutcome { params: out.x, cost: out.f, rank, evals, converged: out.converged, trace: rows })
            })
            .collect();

        let mut best: Option<RestartOutcome> = None;
        let mut offset = 0;
        let mut evaluations = 0;
        for o in outcomes {
            let o = o?;
            for (i, c) in o.trace.iter().enumerate() {
                trace.push(TraceRow {
                    state_index: k,
                    eval_index: offset + i,
                    cost_mev: c.cost,
                    energy_mev: c.energy,
                    overlap_penalty_mev: c.penalty,
                });
            }
            offset += o.trace.len();
            evaluations += o.evals;
            if best.as_ref().is_none_or(|b| o.rank < b.rank) {
                best = Some(o);
            }
        }
        let best = best.expect("at least one restart");
        let params = AnsatzParameters::new(best.params);
        let energy = if evaluator.is_stochastic() {
            evaluator.energy(&params, seed::derive(state_seed, STREAM_FINAL))?
        } else {
            evaluator.energy(&params, 0)?
        };
        let ideal_energy = h.quadratic_form(amplitude_map(&params).as_slice());
        let overlaps = priors.iter().map(|p| overlap(&params, p)).collect::<Result<Vec<_>, _>>()?;
        if !best.converged {
            log::warn!("state {k}: optimizer budget exhausted before the trust region closed");
        }
        states.push(StateResult {
            index: k,
            params,
            energy,
            ideal_energy,
            overlaps,
            best_cost: best.cost,
            evaluations,
            converged: best.converged,
        });
    }
    Ok(VqdResult { states, trace })
}

/// Convergence trace as CSV with a header row.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<Vec<TraceRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::exciton::{build_hamiltonian, diagonalize, Coupling, ExcitonConfig};

    fn anthracene() -> ExcitonHamiltonian {
        build_hamiltonian(&ExcitonConfig::from_toml(bundled::ANTHRACENE5).unwrap()).unwrap()
    }

    fn from_matrix(n: usize, m: &[f64]) -> ExcitonHamiltonian {
        let mut couplings = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if m[a * n + b] != 0.0 {
                    couplings.push(Coupling { m: a, n: b, v_mev: m[a * n + b] });
                }
            }
        }
        build_hamiltonian(&ExcitonConfig {
            n,
            onsite_mev: (0..n).map(|i| m[i * n + i]).collect(),
            couplings,
            dipoles: None,
            energy_offset_mev: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn cost_examples() {
        let h = anthracene();
        let eval = RawEvaluator::new(&h, Backend::Exact, 0);
        let p = AnsatzParameters::new(vec![0.4, -0.3, 1.1, 0.2]);
        let e = eval.energy(&p, 0).unwrap();
        assert_eq!(cost(&eval, &p, &[], &[], 0).unwrap().cost, e);
        let same = cost(&eval, &p, std::slice::from_ref(&p), &[50.0], 0).unwrap();
        assert!((same.cost - e - 50.0).abs() < 1e-9);
        // (1,0,0,0,0) vs (0,0,0,0,1)
        let first = AnsatzParameters::zeros(5);
        let last = AnsatzParameters::new(vec![std::f64::consts::PI, 0.0, 0.0, 0.0]);
        let orth = cost(&eval, &last, &[first], &[50.0], 0).unwrap();
        assert!(orth.penalty.abs() < 1e-20);
    }

    #[test]
    fn dimer_gives_plus_minus_v() {
        let h = from_matrix(2, &[0.0, 7.0, 7.0, 0.0]);
        let r = solve(&h, &VqdSettings::default(), Backend::Exact, 0).unwrap();
        let e = r.energies();
        assert!((e[0] + 7.0).abs() < 1e-6 && (e[1] - 7.0).abs() < 1e-6, "{e:?}");
        assert!(r.converged());
    }

    #[test]
    fn noiseless_anthracene_spectrum() {
        let h = anthracene();
        let exact = diagonalize(&h).unwrap().eigenvalues;
        let r = solve(&h, &VqdSettings::default(), Backend::Exact, 0).unwrap();
        for (e, r) in r.energies().iter().zip(bundled::REFERENCE_EIGENVALUES) {
            assert!((e - r).abs() < 0.01);
        }
        // A tighter trust region and budget pin every state to 1e-4 meV.
        let mut tight = VqdSettings::default();
        tight.optimizer.options.tolerance = 1e-6;
        tight.optimizer.options.max_evals = 3000;
        let r = solve(&h, &tight, Backend::Exact, 0).unwrap();
        assert!(r.converged());
        for (k, s) in r.states.iter().enumerate() {
            assert!((s.energy - exact[k]).abs() < 1e-4, "state {k}: {} vs {}", s.energy, exact[k]);
            assert!(s.overlaps.iter().all(|&o| o < 1e-3), "{:?}", s.overlaps);
        }
    }

    #[test]
    fn deflation_on_random_hamiltonians() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut done = 0;
        while done < 20 {
            let n = 5;
            let mut m = vec![0.0; n * n];
            for a in 0..n {
                m[a * n + a] = rng.random_range(-10.0..10.0);
                for b in a + 1..n {
                    let v = rng.random_range(-10.0..10.0);
                    m[a * n + b] = v;
                    m[b * n + a] = v;
                }
            }
            let h = from_matrix(n, &m);
            let exact = diagonalize(&h).unwrap().eigenvalues;
            let scale = exact.iter().fold(0.0f64, |s, e| s.max(e.abs()));
            if exact.windows(2).any(|w| w[1] - w[0] < 0.05 * scale) {
                continue;
            }
            let settings = VqdSettings { seed: done, ..VqdSettings::default() };
            let r = solve(&h, &settings, Backend::Exact, 0).unwrap();
            for (k, s) in r.states.iter().enumerate() {
                assert!(
                    (s.energy - exact[k]).abs() <= 1e-3 * scale,
                    "trial {done} state {k}: {} vs {}",
                    s.energy,
                    exact[k]
                );
            }
            done += 1;
        }
    }

    #[test]
    fn trace_running_minimum_and_determinism() {
        let h = anthracene();
        let settings = VqdSettings { states: Some(2), seed: 5, ..VqdSettings::default() };
        let a = solve(&h, &settings, Backend::Sampled, 256).unwrap();
        let b = solve(&h, &settings, Backend::Sampled, 256).unwrap();
        assert_eq!(a, b);
        let mut best = f64::INFINITY;
        for row in a.trace.iter().filter(|r| r.state_index == 0) {
            let next = best.min(row.cost_mev);
            assert!(next <= best);
            best = next;
        }
        let mut buf = Vec::new();
        write_trace_csv(&a.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("state_index,eval_index,cost_meV,energy_meV,overlap_penalty_meV\n"));
        assert_eq!(read_trace_csv(buf.as_slice()).unwrap(), a.trace);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let h = anthracene();
        let mut settings = VqdSettings { states: Some(1), restarts: 1, ..VqdSettings::default() };
        settings.optimizer.options.max_evals = 8;
        let r = solve(&h, &settings, Backend::Exact, 0).unwrap();
        assert!(!r.converged());
        assert_eq!(r.states[0].evaluations, 8);
    }

    #[test]
    fn wrong_weight_count() {
        let h = anthracene();
        let settings = VqdSettings { penalty_weights: Some(vec![1.0]), ..VqdSettings::default() };
        assert!(matches!(solve(&h, &settings, Backend::Exact, 0), Err(Error::Settings(_))));
    }
}
