//! Experiment configuration: one TOML document with per-command sections.

use std::path::{Path, PathBuf};

use frenkel_core::bundled;
use frenkel_core::exciton::{build_hamiltonian, ExcitonConfig, ExcitonHamiltonian};
use frenkel_core::measurement::Backend;
use frenkel_core::mitigation::{Activation, Hyperparameters};
use frenkel_core::sim::{load_noise_model, NoiseModel};
use frenkel_core::vqd::VqdSettings;
use serde::{Deserialize, Serialize};

use crate::{sha256_hex, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Exact,
    Sampled,
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    /// Exciton document path (relative to the config file) or `bundled:<name>`.
    pub exciton: String,
    /// Noise document, same conventions. Required for the noisy backend.
    #[serde(default)]
    pub noise: Option<String>,
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
    /// `layout[logical] = physical`; defaults to `0..n`.
    #[serde(default)]
    pub layout: Option<Vec<usize>>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Output directory (relative to the config file); `--out` overrides it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub vqd: VqdSettings,
    #[serde(default)]
    pub mitigation: MitigationSettings,
    #[serde(default)]
    pub pipeline: PipelineSettings,
}

fn default_backend() -> BackendKind {
    BackendKind::Exact
}

fn default_shots() -> u64 {
    8192
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigationSettings {
    pub dataset_size: usize,
    pub dataset_shots: u64,
    pub hyperparameters: Hyperparameters,
    /// Pre-trained model document; skips training in `pipeline`.
    pub model: Option<String>,
    pub learning_curve: Option<LearningCurveSettings>,
}

impl Default for MitigationSettings {
    fn default() -> Self {
        MitigationSettings {
            dataset_size: 1000,
            dataset_shots: 1024,
            hyperparameters: Hyperparameters::default(),
            model: None,
            learning_curve: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningCurveSettings {
    pub sizes: Vec<usize>,
    pub seeds: u64,
    pub activations: Vec<Activation>,
}

impl Default for LearningCurveSettings {
    fn default() -> Self {
        LearningCurveSettings {
            sizes: vec![100, 200, 400, 600, 800],
            seeds: 3,
            activations: vec![Activation::Relu, Activation::Sigmoid],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSettings {
    /// Train a mitigator when no model file is given.
    pub train: bool,
    pub dl_vqd: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings { train: true, dl_vqd: false }
    }
}

/// Command-line overrides applied on top of the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub backend: Option<BackendKind>,
    pub states: Option<usize>,
}

/// A parsed config with every referenced document loaded and checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    /// Raw config text, copied verbatim into the output directory.
    pub text: String,
    pub config_hash: String,
    pub exciton: ExcitonConfig,
    pub hamiltonian: ExcitonHamiltonian,
    pub noise: Option<NoiseModel>,
    pub layout: Vec<usize>,
    pub output: PathBuf,
    base: PathBuf,
}

/// `bundled:<name>` documents shipped with the library.
pub fn bundled_document(name: &str) -> Option<&'static str> {
    match name {
        "anthracene5" => Some(bundled::ANTHRACENE5),
        "dimer" => Some(bundled::DIMER),
        "guadalupe" => Some(bundled::GUADALUPE_NOISE),
        "noiseless5" => Some(bundled::NOISELESS5),
        _ => None,
    }
}

fn read_reference(base: &Path, reference: &str, what: &str) -> Result<String, CliError> {
    if let Some(name) = reference.strip_prefix("bundled:") {
        return bundled_document(name)
            .map(str::to_owned)
            .ok_or_else(|| CliError::Config(format!("{what}: unknown bundled document `{name}`")));
    }
    let path = base.join(reference);
    std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{what}: cannot read {}: {e}", path.display())))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if config.vqd.seed != 0 {
            return Err(CliError::Config("vqd.seed: set the top-level `seed` instead".into()));
        }
        Ok(config)
    }
}

impl Experiment {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_text(&text, &base, overrides)
    }

    /// `base` resolves relative references.
    pub fn from_text(text: &str, base: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = ExperimentConfig::parse(text)?;
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(backend) = overrides.backend {
            config.backend = backend;
        }
        if let Some(k) = overrides.states {
            if k == 0 {
                return Err(CliError::Config("--states must be at least 1".into()));
            }
            config.vqd.states = Some(k);
        }

        let exciton = ExcitonConfig::from_toml(&read_reference(base, &config.exciton, "exciton")?)
            .map_err(|e| CliError::Config(format!("exciton: {e}")))?;
        let hamiltonian = build_hamiltonian(&exciton).map_err(|e| CliError::Config(format!("exciton: {e}")))?;
        let n = hamiltonian.rank();
        let noise = match &config.noise {
            Some(r) => Some(
                load_noise_model(&read_reference(base, r, "noise")?)
                    .map_err(|e| CliError::Config(format!("noise: {e}")))?,
            ),
            None => None,
        };
        let layout = config.layout.clone().unwrap_or_else(|| (0..n).collect());
        if let Some(noise) = &noise {
            noise.check_layout(&layout, n).map_err(|e| CliError::Config(format!("layout: {e}")))?;
        } else if layout.len() != n {
            return Err(CliError::Config(format!("layout has {} entries for {n} molecules", layout.len())));
        }
        if config.backend == BackendKind::Noisy && noise.is_none() {
            return Err(CliError::Config("backend `noisy` needs a `noise` document".into()));
        }
        if config.backend != BackendKind::Exact && config.shots == 0 {
            return Err(CliError::Config("shots must be positive".into()));
        }
        if config.mitigation.dataset_shots == 0 {
            return Err(CliError::Config("mitigation.dataset_shots must be positive".into()));
        }
        let output = match (&overrides.out, &config.output) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => base.join(o),
            (None, None) => return Err(CliError::Config("no output directory: set `output` or pass --out".into())),
        };
        Ok(Experiment {
            config_hash: sha256_hex(text.as_bytes()),
            text: text.to_owned(),
            config,
            exciton,
            hamiltonian,
            noise,
            layout,
            output,
            base: base.to_path_buf(),
        })
    }

    pub fn backend(&self) -> Backend {
        match self.config.backend {
            BackendKind::Exact => Backend::Exact,
            BackendKind::Sampled => Backend::Sampled,
            BackendKind::Noisy => Backend::noisy(self.noise.clone().expect("checked at load"), self.layout.clone()),
        }
    }

    /// Noise used for training data; noiseless when the config has none.
    pub fn training_noise(&self) -> NoiseModel {
        self.noise.clone().unwrap_or_else(|| NoiseModel::noiseless(self.layout.iter().max().map_or(0, |m| m + 1)))
    }

    pub fn read_model(&self) -> Result<Option<String>, CliError> {
        self.config.mitigation.model.as_deref().map(|r| read_reference(&self.base, r, "mitigation.model")).transpose()
    }
}
