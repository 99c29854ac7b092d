//! Experiment configuration for the command-line driver.
//!
//! Configs are JSON objects. Unknown keys are rejected at every level and
//! every field except the ones a command needs has a default, so the
//! smallest useful config is `{}` or `{"horizon": 8}`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dictionaries::FourierDictionary;
use crate::error::{Error, Result};
use crate::harness::ComparatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Powerlaw,
    Finetune,
    Stats,
    Verify,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Powerlaw => "powerlaw",
            ExperimentKind::Finetune => "finetune",
            ExperimentKind::Stats => "stats",
            ExperimentKind::Verify => "verify",
        }
    }
}

/// One horizon or a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HorizonSpec {
    One(usize),
    Sweep(Vec<usize>),
}

impl HorizonSpec {
    pub fn values(&self) -> Vec<usize> {
        match self {
            HorizonSpec::One(t) => vec![*t],
            HorizonSpec::Sweep(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DictionaryConfig {
    /// Fixed-horizon Haar; the horizon must be a power of two.
    Haar {},
    /// Haar restarted on doubling blocks; any horizon.
    AnytimeHaar {},
    Fourier {
        base_frequency: f64,
        max_order: usize,
        #[serde(default = "default_true")]
        include_constant: bool,
    },
    Identity {},
    /// No features: the learner always predicts zero.
    None {},
}

impl DictionaryConfig {
    /// Number of features, where it does not depend on the horizon.
    pub fn size(&self, dim: usize, horizon: usize) -> usize {
        match self {
            DictionaryConfig::Haar {} => horizon,
            DictionaryConfig::AnytimeHaar {} => horizon,
            DictionaryConfig::Fourier {
                max_order,
                include_constant,
                ..
            } => 2 * max_order + usize::from(*include_constant),
            DictionaryConfig::Identity {} => dim,
            DictionaryConfig::None {} => 0,
        }
    }

    pub fn fourier(&self) -> Result<Option<FourierDictionary>> {
        match self {
            DictionaryConfig::Fourier {
                base_frequency,
                max_order,
                include_constant,
            } => Ok(Some(FourierDictionary::new(
                *base_frequency,
                *max_order,
                *include_constant,
            )?)),
            _ => Ok(None),
        }
    }
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        DictionaryConfig::Haar {}
    }
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        EnvironmentConfig::Zero {}
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Sign-flip probability.
    pub p: f64,
    /// Noise half-width.
    pub q: f64,
}

/// Comparator width / switch count: a number, or `"sqrt"` (floor of
/// `sqrt(T)`) or `"max"` (`T - 1`), resolved per horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Fixed(usize),
    Rule(KRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    Sqrt,
    Max,
}

impl KSpec {
    pub fn resolve(&self, horizon: usize) -> usize {
        match self {
            KSpec::Fixed(k) => *k,
            KSpec::Rule(KRule::Sqrt) => (horizon as f64).sqrt().floor() as usize,
            KSpec::Rule(KRule::Max) => horizon.saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparatorConfig {
    pub kind: ComparatorKind,
    pub k: KSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    /// Zero linear losses.
    Zero {},
    /// Absolute loss against the configured example comparator.
    Comparator {},
    /// Absolute loss against a generated switching series.
    Switching {},
    /// Absolute loss against the input series.
    Series {},
    /// `g_t = G sign(x_t)`.
    SignAdversary {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseConfig {
    Zero {},
    ZeroOrderHold {
        #[serde(default)]
        initial: f64,
    },
    /// `a_t = z_t`.
    Perfect {},
    /// A column of the input file.
    File {
        column: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    #[default]
    Haar,
    Dft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// If present, must match the subcommand.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub horizon: Option<HorizonSpec>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub dictionary: DictionaryConfig,
    /// Dictionaries to sweep in `finetune`; `[dictionary]` when empty.
    #[serde(default)]
    pub dictionary_sweep: Vec<DictionaryConfig>,
    #[serde(default = "default_one")]
    pub epsilon: f64,
    #[serde(default = "default_one")]
    pub lipschitz: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
    #[serde(default)]
    pub comparator: Option<ComparatorConfig>,
    #[serde(default)]
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// 0-based column of the input file holding the series.
    #[serde(default = "default_value_column")]
    pub value_column: usize,
    #[serde(default)]
    pub base: Option<BaseConfig>,
    #[serde(default)]
    pub transform: TransformKind,
    /// Fit the first differences instead of the series itself.
    #[serde(default)]
    pub difference: bool,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Fail with exit code 3 when a run exceeds its closed-form bound.
    #[serde(default)]
    pub check_bounds: bool,
    /// Random cases per check for `verify`.
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_dim() -> usize {
    1
}

fn default_one() -> f64 {
    1.0
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_value_column() -> usize {
    1
}

fn default_top_k() -> usize {
    100
}

fn default_cases() -> usize {
    200
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields default")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Parameter checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::invalid(format!(
                "lipschitz must be positive, got {}",
                self.lipschitz
            )));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds must not be empty"));
        }
        if let Some(h) = &self.horizon {
            let hs = h.values();
            if hs.is_empty() || hs.contains(&0) {
                return Err(Error::invalid("horizons must be positive"));
            }
        }
        for d in std::iter::once(&self.dictionary).chain(&self.dictionary_sweep) {
            d.fourier()?;
        }
        Ok(())
    }

    pub fn horizons(&self) -> Option<Vec<usize>> {
        self.horizon.as_ref().map(HorizonSpec::values)
    }

    pub fn dictionaries(&self) -> Vec<DictionaryConfig> {
        if self.dictionary_sweep.is_empty() {
            vec![self.dictionary.clone()]
        } else {
            self.dictionary_sweep.clone()
        }
    }
}
