//! Subcommand orchestration. Stages run in order; a failed stage is recorded in the
//! report and every later stage is skipped.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use frenkel_core::exciton::{diagonalize, oscillator_strengths, DEFAULT_ALLOWED_THRESHOLD};
use frenkel_core::measurement::MeasurementPlan;
use frenkel_core::mitigation::{
    self, dataset_hash, generate_dataset, learning_curve, remeasure, write_dataset_csv, DatasetSpec, Hyperparameters,
    MitigatorModel, StateEnergies,
};
use frenkel_core::seed;
use frenkel_core::vqd::{self, write_trace_csv, VqdResult};

use crate::config::{BackendKind, Experiment, LearningCurveSettings};
use crate::report::{
    Check, ExactSection, LearningCurveRow, MethodResult, Provenance, RunReport, StageStatus, TrainingSummary,
    VqdSummary,
};
use crate::{sha256_hex, CliError};

const STREAM_VQD: u64 = 1;
const STREAM_DATASET: u64 = 2;
const STREAM_TRAIN: u64 = 3;
const STREAM_REMEASURE: u64 = 4;
const STREAM_DL_VQD: u64 = 5;
const STREAM_CURVE: u64 = 6;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_STAGE_FAILED: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Exact,
    Vqd,
    TrainMitigator { sweep: bool },
    Pipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Vqd => "vqd",
            Command::TrainMitigator { .. } => "train-mitigator",
            Command::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub exit_code: u8,
}

/// Runs `command` and writes the report plus every intermediate into the output directory.
pub fn run(command: Command, exp: &Experiment) -> Result<Outcome, CliError> {
    if command == Command::Pipeline && exp.config.mitigation.model.is_none() && !exp.config.pipeline.train {
        return Err(CliError::Config(
            "pipeline needs a mitigator: set mitigation.model or enable pipeline.train".into(),
        ));
    }
    let mut run = Run::start(command, exp)?;
    match command {
        Command::Exact => {}
        Command::Vqd => run.vqd_stage(exp, true),
        Command::TrainMitigator { sweep } => {
            run.train_stage(exp, sweep);
        }
        Command::Pipeline => run.pipeline(exp),
    }
    run.finish()
}

struct Run<'a> {
    out: &'a Path,
    report: RunReport,
    failed: bool,
    converged: bool,
    vqd: Option<VqdResult>,
}

fn exact_section(exp: &Experiment) -> Result<ExactSection, String> {
    let eig = diagonalize(&exp.hamiltonian).map_err(|e| e.to_string())?;
    let offset = exp.exciton.energy_offset_mev;
    Ok(match oscillator_strengths(&eig, &exp.exciton, offset, DEFAULT_ALLOWED_THRESHOLD) {
        Ok(s) => ExactSection {
            eigenvalues_mev: eig.eigenvalues,
            spectrum: Some(s.states),
            davydov: Some(s.davydov),
            unavailable: None,
        },
        Err(e) => ExactSection {
            eigenvalues_mev: eig.eigenvalues,
            spectrum: None,
            davydov: None,
            unavailable: Some(e.to_string()),
        },
    })
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl<'a> Run<'a> {
    fn start(command: Command, exp: &'a Experiment) -> Result<Self, CliError> {
        let out = exp.output.as_path();
        std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
        let mut inputs = BTreeMap::new();
        let mut files = BTreeMap::new();
        let exciton_doc = exp.exciton.to_toml();
        let mut docs = vec![("config", "config.toml", exp.text.clone()), ("exciton", "exciton.toml", exciton_doc)];
        if let Some(noise) = &exp.noise {
            docs.push(("noise", "noise.toml", noise.to_document()));
        }
        for (key, name, text) in docs {
            let path = out.join(name);
            std::fs::write(&path, &text).map_err(|e| io_error(&path, e))?;
            inputs.insert(key.to_owned(), sha256_hex(text.as_bytes()));
            files.insert(key.to_owned(), name.to_owned());
        }
        let provenance = Provenance {
            config_hash: exp.config_hash.clone(),
            seed: exp.config.seed,
            versions: BTreeMap::from([
                ("frenkel-core".to_owned(), frenkel_core::VERSION.to_owned()),
                ("frenkel-cli".to_owned(), env!("CARGO_PKG_VERSION").to_owned()),
            ]),
            inputs,
        };
        let exact = exact_section(exp).map_err(CliError::Config)?;
        let mut report = RunReport::new(command.name(), exact, provenance);
        report.files = files;
        report.stage("exact", StageStatus::Ok, None);
        let spectrum = out.join("spectrum.json");
        let text = serde_json::to_string_pretty(&report.exact).expect("spectrum serializes") + "\n";
        std::fs::write(&spectrum, text).map_err(|e| io_error(&spectrum, e))?;
        report.files.insert("spectrum".into(), "spectrum.json".into());
        Ok(Run { out, report, failed: false, converged: true, vqd: None })
    }

    /// Runs `f` as stage `name` unless an earlier stage failed.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T, String>) -> Option<T> {
        if self.failed {
            self.report.stage(name, StageStatus::Skipped, Some("an earlier stage failed".into()));
            return None;
        }
        log::info!("stage {name}");
        match f(self) {
            Ok(v) => {
                self.report.stage(name, StageStatus::Ok, None);
                Some(v)
            }
            Err(message) => {
                log::error!("stage {name} failed: {message}");
                self.report.stage(name, StageStatus::Failed, Some(message));
                self.failed = true;
                None
            }
        }
    }

    fn write(
        &mut self,
        key: &str,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>) -> Result<(), String>,
    ) -> Result<(), String> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        let path = self.out.join(name);
        std::fs::write(&path, buf).map_err(|e| format!("{}: {e}", path.display()))?;
        self.report.files.insert(key.into(), name.into());
        Ok(())
    }

    fn vqd_stage(&mut self, exp: &Experiment, remeasure_noisy: bool) {
        let backend = exp.backend();
        let result = self.stage("vqd", |run| {
            let mut settings = exp.config.vqd.clone();
            settings.seed = seed::derive(exp.config.seed, STREAM_VQD);
            let r = vqd::solve(&exp.hamiltonian, &settings, backend.clone(), exp.config.shots)
                .map_err(|e| e.to_string())?;
            run.write("vqd_trace", "vqd_trace.csv", |b| write_trace_csv(&r.trace, b).map_err(|e| e.to_string()))?;
            Ok(r)
        });
        let Some(result) = result else { return };
        self.converged &= result.converged();
        self.report.vqd = Some(VqdSummary {
            backend: backend.name().into(),
            shots: if backend.is_stochastic() { exp.config.shots } else { 0 },
            converged: result.converged(),
            evaluations: result.states.iter().map(|s| s.evaluations).collect(),
            ideal_energies_mev: result.states.iter().map(|s| s.ideal_energy).collect(),
        });
        if remeasure_noisy && exp.config.backend == BackendKind::Noisy {
            self.remeasure_stage(exp, &result, None);
        } else {
            let m = MethodResult::new("vqd", result.energies(), &self.report.exact);
            self.report.methods.push(m);
        }
        self.vqd = Some(result);
    }

    fn remeasure_stage(&mut self, exp: &Experiment, result: &VqdResult, model: Option<&MitigatorModel>) {
        let name = if model.is_some() { "post-dl" } else { "post-select" };
        let energies = self.stage(name, |run| {
            let seed = seed::derive(exp.config.seed, STREAM_REMEASURE);
            let e = remeasure(result, model, &exp.hamiltonian, exp.config.shots, &exp.backend(), seed)
                .map_err(|e| e.to_string())?;
            run.write("remeasured", "remeasured.csv", |b| write_state_energies(&e, b))?;
            Ok(e)
        });
        let Some(energies) = energies else { return };
        let exact = &self.report.exact;
        let mut methods = vec![
            MethodResult::new("raw", energies.iter().map(|e| e.raw).collect(), exact),
            MethodResult::new("post-selected", energies.iter().map(|e| e.post_selected).collect(), exact),
        ];
        if model.is_some() {
            methods.push(MethodResult::new("post-dl", energies.iter().filter_map(|e| e.post_dl).collect(), exact));
        }
        self.report.methods.extend(methods);
    }

    /// Generates the dataset and trains; returns the model.
    fn train_stage(&mut self, exp: &Experiment, sweep: bool) -> Option<MitigatorModel> {
        let m = &exp.config.mitigation;
        let n = exp.hamiltonian.rank();
        let pairs: Vec<(usize, usize)> = MeasurementPlan::new(&exp.hamiltonian).jobs().iter().map(|j| j.pair).collect();
        let noise = exp.training_noise();
        let data = self.stage("dataset", |run| {
            let spec = DatasetSpec {
                count: m.dataset_size,
                shots: m.dataset_shots,
                pairs: pairs.clone(),
                seed: seed::derive(exp.config.seed, STREAM_DATASET),
            };
            let data = generate_dataset(n, &spec, &noise, &exp.layout).map_err(|e| e.to_string())?;
            run.write("dataset", "dataset.csv", |b| write_dataset_csv(&data, b).map_err(|e| e.to_string()))?;
            Ok(data)
        })?;
        let hash = dataset_hash(&data);
        let train_seed = seed::derive(exp.config.seed, STREAM_TRAIN);
        let model = self.stage("train", |run| {
            let model = mitigation::train(&data, &pairs, &m.hyperparameters, train_seed).map_err(|e| e.to_string())?;
            let json = model.to_json();
            run.write("model", "model.json", |b| {
                b.extend_from_slice(json.as_bytes());
                Ok(())
            })?;
            Ok(model)
        })?;
        let curve = match (&m.learning_curve, sweep) {
            (Some(c), _) => Some(c.clone()),
            (None, true) => Some(LearningCurveSettings::default()),
            (None, false) => None,
        };
        let rows = match curve {
            Some(c) => self.stage("learning-curve", |run| {
                let rows =
                    curve_rows(&data, &pairs, &c, &m.hyperparameters, seed::derive(exp.config.seed, STREAM_CURVE))?;
                run.write("learning_curve", "learning_curve.csv", |b| write_curve(&rows, b))?;
                Ok(rows)
            }),
            None => None,
        };
        self.report.training = Some(TrainingSummary {
            samples: data.len(),
            shots: m.dataset_shots,
            test_rmse: model.training.test_rmse,
            test_mae: model.training.test_mae,
            final_train_loss: model.training.train_loss.last().copied(),
            final_validation_loss: model.training.validation_loss.last().copied(),
            dataset_hash: hash,
            model_hash: model.hash(),
            learning_curve: rows,
        });
        Some(model)
    }

    fn load_model_stage(&mut self, text: &str) -> Option<MitigatorModel> {
        self.stage("load-model", |run| {
            let model = MitigatorModel::from_json(text).map_err(|e| format!("mitigation.model: {e}"))?;
            run.write("model", "model.json", |b| {
                b.extend_from_slice(text.as_bytes());
                Ok(())
            })?;
            run.report.training = Some(TrainingSummary {
                samples: model.training.samples,
                shots: 0,
                test_rmse: model.training.test_rmse,
                test_mae: model.training.test_mae,
                final_train_loss: model.training.train_loss.last().copied(),
                final_validation_loss: model.training.validation_loss.last().copied(),
                dataset_hash: model.training.dataset_hash.clone(),
                model_hash: model.hash(),
                learning_curve: None,
            });
            Ok(model)
        })
    }

    fn pipeline(&mut self, exp: &Experiment) {
        let model = match exp.read_model() {
            Ok(Some(text)) => self.load_model_stage(&text),
            Ok(None) => self.train_stage(exp, false),
            Err(e) => {
                self.report.stage("load-model", StageStatus::Failed, Some(e.to_string()));
                self.failed = true;
                None
            }
        };
        self.vqd_stage(exp, false);
        if let Some(result) = self.vqd.take() {
            self.report.methods.clear();
            self.remeasure_stage(exp, &result, model.as_ref());
            self.vqd = Some(result);
        } else {
            self.report.stage("post-dl", StageStatus::Skipped, Some("an earlier stage failed".into()));
        }
        if exp.config.pipeline.dl_vqd {
            let model = model.map(Arc::new);
            let result = self.stage("dl-vqd", |run| {
                let model = model.ok_or("no model")?;
                let mut settings = exp.config.vqd.clone();
                settings.seed = seed::derive(exp.config.seed, STREAM_DL_VQD);
                let r =
                    mitigation::dl_vqd_pipeline(&exp.hamiltonian, model, &settings, exp.backend(), exp.config.shots)
                        .map_err(|e| e.to_string())?;
                run.write("dl_vqd_trace", "dl_vqd_trace.csv", |b| {
                    write_trace_csv(&r.trace, b).map_err(|e| e.to_string())
                })?;
                Ok(r)
            });
            if let Some(r) = result {
                self.converged &= r.converged();
                let m = MethodResult::new("dl-vqd", r.energies(), &self.report.exact);
                self.report.methods.push(m);
            }
        }
        self.ordering_checks();
    }

    fn ordering_checks(&mut self) {
        let pairs = [("post-dl", "dl-vqd"), ("post-dl", "post-selected"), ("post-selected", "raw")];
        for (a, b) in pairs {
            let err = |name: &str| self.report.method(name).map(|m| m.mean_abs_error_mev);
            if let (Some(ea), Some(eb)) = (err(a), err(b)) {
                let holds = ea <= eb;
                if !holds {
                    log::warn!("mean |error| of {a} ({ea:.3} meV) exceeds {b} ({eb:.3} meV)");
                }
                self.report.checks.push(Check {
                    name: format!("{a} <= {b}"),
                    holds,
                    detail: format!("mean |error| {ea:.6} vs {eb:.6} meV"),
                });
            }
        }
    }

    fn finish(mut self) -> Result<Outcome, CliError> {
        let path = self.out.join("report.json");
        self.report.files.insert("report".into(), "report.json".into());
        std::fs::write(&path, self.report.to_json()).map_err(|e| io_error(&path, e))?;
        let exit_code = if self.failed {
            EXIT_STAGE_FAILED
        } else if !self.converged {
            EXIT_NOT_CONVERGED
        } else {
            EXIT_OK
        };
        Ok(Outcome { report: self.report, exit_code })
    }
}

fn curve_rows(
    data: &[mitigation::TrainingSample],
    pairs: &[(usize, usize)],
    settings: &LearningCurveSettings,
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<Vec<LearningCurveRow>, String> {
    let mut rows = Vec::new();
    for &activation in &settings.activations {
        let h = Hyperparameters { activation, ..hyper.clone() };
        let points =
            learning_curve(data, pairs, &settings.sizes, settings.seeds, &h, seed).map_err(|e| e.to_string())?;
        let tag = serde_json::to_value(activation).expect("tag").as_str().unwrap_or_default().to_owned();
        rows.extend(points.into_iter().map(|point| LearningCurveRow { activation: tag.clone(), point }));
    }
    Ok(rows)
}

fn write_curve(rows: &[LearningCurveRow], out: &mut Vec<u8>) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["activation", "size", "mean_rmse", "std_rmse"]).map_err(|e| e.to_string())?;
    for r in rows {
        let p = &r.point;
        w.write_record([r.activation.clone(), p.size.to_string(), p.mean_rmse.to_string(), p.std_rmse.to_string()])
            .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn write_state_energies(rows: &[StateEnergies], out: &mut Vec<u8>) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state_index", "raw_meV", "post_selected_meV", "post_dl_meV"]).map_err(|e| e.to_string())?;
    for r in rows {
        let dl = r.post_dl.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.index.to_string(), r.raw.to_string(), r.post_selected.to_string(), dl])
            .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}
