use std::path::Path;

use serde::{Deserialize, Serialize};

use qabom_core::datagen::{coded_bernoulli, coded_bernoulli_pmf, hidden_mode, hidden_mode_pmf};
use qabom_core::{rng, Bitstring, DataDistribution, Dataset, IsingModel, ThermalizeConfig, TrainConfig};

use crate::CliError;

/// Stream tag for dataset sampling, disjoint from the training tags.
pub const DATA_STREAM: u64 = 99;

/// Source of training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    /// `[n, k]` repetition code over Bernoulli(eta) words with bit flips.
    CodedBernoulli { n: usize, k: usize, eta: f64, p_flip: f64, count: usize },
    /// Noisy copies of a few mode strings.
    HiddenMode { n: usize, modes: Vec<String>, p: f64, count: usize },
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::CodedBernoulli { n: 4, k: 2, eta: 0.6, p_flip: 0.025, count: 100 }
    }
}

impl DataSpec {
    pub fn width(&self) -> usize {
        match self {
            DataSpec::CodedBernoulli { n, .. } | DataSpec::HiddenMode { n, .. } => *n,
        }
    }

    fn modes(modes: &[String]) -> qabom_core::Result<Vec<Bitstring>> {
        modes.iter().map(|m| m.parse()).collect()
    }

    /// Exact distribution the samples are drawn from.
    pub fn distribution(&self) -> qabom_core::Result<DataDistribution> {
        match self {
            DataSpec::CodedBernoulli { n, k, eta, p_flip, .. } => coded_bernoulli_pmf(*n, *k, *eta, *p_flip),
            DataSpec::HiddenMode { n, modes, p, .. } => hidden_mode_pmf(*n, &Self::modes(modes)?, *p),
        }
    }

    /// Samples and their generating distribution for one seed.
    pub fn generate(&self, seed: u64) -> qabom_core::Result<(Dataset, DataDistribution)> {
        let mut r = rng::stream(seed, &[DATA_STREAM]);
        match self {
            DataSpec::CodedBernoulli { n, k, eta, p_flip, count } => {
                coded_bernoulli(*n, *k, *eta, *p_flip, *count, &mut r)
            }
            DataSpec::HiddenMode { n, modes, p, count } => hidden_mode(*n, &Self::modes(modes)?, *p, *count, &mut r),
        }
    }

    pub fn validate(&self) -> qabom_core::Result<()> {
        let count = match self {
            DataSpec::CodedBernoulli { count, .. } | DataSpec::HiddenMode { count, .. } => *count,
        };
        if count == 0 {
            return Err(qabom_core::Error::InvalidArgument("sample count must be at least 1".into()));
        }
        self.distribution().map(|_| ())
    }
}

/// Training experiment: model and optimizer settings, data and seeding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub data: DataSpec,
    /// Seed used when neither `--seed` nor `QABOM_SEED` is given.
    pub seed: u64,
    /// Independent runs with seeds `seed, seed + 1, ...`.
    pub replicates: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { train: TrainConfig::default(), data: DataSpec::default(), seed: 1, replicates: 1 }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.train.validate().map_err(CliError::config)?;
        self.data.validate().map_err(CliError::config)?;
        if self.data.width() != self.train.visible {
            return Err(CliError::Config(format!(
                "data width {} does not match {} visible units",
                self.data.width(),
                self.train.visible
            )));
        }
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replicates as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }
}

/// Standalone thermalization of a given model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalizeJob {
    pub model: IsingModel,
    #[serde(default)]
    pub thermalize: ThermalizeConfig,
    #[serde(default)]
    pub seed: u64,
}

impl ThermalizeJob {
    pub fn validate(&self) -> Result<(), CliError> {
        self.thermalize.validate().map_err(CliError::config)?;
        if self.model.n_units() > qabom_core::ising::MAX_DIAGNOSTIC_UNITS {
            return Err(CliError::Config(format!(
                "diagnostic report supports at most {} units",
                qabom_core::ising::MAX_DIAGNOSTIC_UNITS
            )));
        }
        Ok(())
    }
}

/// Dataset generation request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenJob {
    pub data: DataSpec,
    pub seed: u64,
}

impl Default for DatagenJob {
    fn default() -> Self {
        Self { data: DataSpec::default(), seed: 1 }
    }
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
