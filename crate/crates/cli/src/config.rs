//! Experiment configuration document: a TOML file with a `mode`, a master
//! `seed`, and one section per mode carrying its inputs and hyperparameters.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use qrbm::sim::CdmSpec;
use qrbm::trainer::{InitScheme, RateSchedule, TrainerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Train,
    Cv,
    Evaluate,
    Classify,
    Compare,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Master seed; every random stream of the run derives from it.
    pub seed: u64,
    /// Output directory for artifacts; overridden by `--out`.
    pub out_dir: Option<PathBuf>,
    pub simulate: Option<SimulateSection>,
    pub train: Option<TrainSection>,
    pub cv: Option<CvSection>,
    pub evaluate: Option<EvaluateSection>,
    pub classify: Option<ClassifySection>,
    pub compare: Option<CompareSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: String,
    pub guess: Option<f64>,
    pub slip: Option<f64>,
    pub delta0: Option<f64>,
    pub p_max: Option<f64>,
    pub weight: Option<f64>,
    pub components: Option<Vec<ModelSection>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub n_subjects: usize,
    pub n_attributes: usize,
    pub rho: f64,
    /// "structured" or "random"; ignored when `q_file` is given.
    pub q_design: Option<String>,
    pub q_file: Option<PathBuf>,
    pub model: ModelSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub responses: PathBuf,
    pub n_attributes: usize,
    pub lambda: f64,
    pub gamma0: f64,
    pub batch_size: Option<usize>,
    pub n_epochs: Option<usize>,
    pub warm_start: Option<PathBuf>,
    pub normalize_w_update: Option<bool>,
    pub schedule: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSection {
    pub responses: PathBuf,
    pub n_attributes: usize,
    pub folds: usize,
    pub lambda_grid: Vec<f64>,
    pub gamma0_grid: Vec<f64>,
    pub batch_size: Option<usize>,
    pub n_epochs: Option<usize>,
    pub validation_epochs: Option<usize>,
    pub normalize_w_update: Option<bool>,
    pub schedule: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub estimated: PathBuf,
    pub truth: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySection {
    pub weights: PathBuf,
    pub visible_bias: PathBuf,
    pub hidden_bias: PathBuf,
    pub responses: PathBuf,
    pub threshold: Option<f64>,
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub estimated: PathBuf,
    pub reference: PathBuf,
    /// Off by default: expert matrices carry labeled attributes, so columns
    /// compare by position unless matching is requested.
    pub match_columns: Option<bool>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        Ok(config)
    }
}

impl ModelSection {
    pub fn to_spec(&self) -> Result<CdmSpec> {
        let spec = match self.family.as_str() {
            "dina" | "dino" => {
                let guess = self
                    .guess
                    .with_context(|| format!("model family {:?} needs `guess`", self.family))?;
                let slip = self
                    .slip
                    .with_context(|| format!("model family {:?} needs `slip`", self.family))?;
                if self.family == "dina" {
                    CdmSpec::Dina { guess, slip }
                } else {
                    CdmSpec::Dino { guess, slip }
                }
            }
            "acdm" | "gdina" => {
                let delta0 = self
                    .delta0
                    .with_context(|| format!("model family {:?} needs `delta0`", self.family))?;
                let p_max = self
                    .p_max
                    .with_context(|| format!("model family {:?} needs `p_max`", self.family))?;
                if self.family == "acdm" {
                    CdmSpec::Acdm { delta0, p_max }
                } else {
                    CdmSpec::Gdina { delta0, p_max }
                }
            }
            "mixture" => {
                let components = self
                    .components
                    .as_ref()
                    .context("mixture model needs `components`")?;
                let mut parts = Vec::with_capacity(components.len());
                for component in components {
                    let weight = component
                        .weight
                        .context("each mixture component needs `weight`")?;
                    parts.push((component.to_spec()?, weight));
                }
                CdmSpec::Mixture(parts)
            }
            other => bail!("unknown model family {other:?}"),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn parse_schedule(name: Option<&str>) -> Result<RateSchedule> {
    match name {
        None | Some("linear") => Ok(RateSchedule::Linear),
        Some("harmonic") => Ok(RateSchedule::Harmonic),
        Some(other) => bail!("unknown schedule {other:?} (expected \"linear\" or \"harmonic\")"),
    }
}

impl TrainSection {
    pub fn to_trainer_config(
        &self,
        seed: u64,
        warm_start: Option<InitScheme>,
    ) -> Result<TrainerConfig> {
        let mut config = TrainerConfig::new(self.n_attributes);
        config.lambda = self.lambda;
        config.gamma0 = self.gamma0;
        if let Some(batch) = self.batch_size {
            config.batch_size = batch;
        }
        if let Some(epochs) = self.n_epochs {
            config.n_epochs = epochs;
        }
        if let Some(init) = warm_start {
            config.init = init;
        }
        if let Some(normalize) = self.normalize_w_update {
            config.normalize_w_update = normalize;
        }
        config.schedule = parse_schedule(self.schedule.as_deref())?;
        config.seed = seed;
        Ok(config)
    }
}
