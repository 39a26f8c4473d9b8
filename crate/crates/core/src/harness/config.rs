use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::agree::MatrixChoice;
use crate::error::{Error, Result};
use crate::gapip::Backend;

/// Parses a seed written in decimal or as `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => t.replace('_', "").parse::<u64>(),
    };
    parsed.map_err(|e| Error::Config(format!("invalid seed {s:?}: {e}")))
}

fn deserialize_seed<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(u64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(n) => Ok(n),
        Raw::Text(s) => parse_seed(&s).map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// A complete, serialisable experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, deserialize_with = "deserialize_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_trials() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Compress(CompressConfig),
    Agree(AgreeConfig),
    GapipGaussian(GaussianConfig),
    GapipSparse(SparseConfig),
    StrategyCheck(StrategyConfig),
    Influence(InfluenceConfig),
    Equality(EqualityConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Compress(_) => "compress",
            Experiment::Agree(_) => "agree",
            Experiment::GapipGaussian(_) => "gapip-gaussian",
            Experiment::GapipSparse(_) => "gapip-sparse",
            Experiment::StrategyCheck(_) => "strategy-check",
            Experiment::Influence(_) => "influence",
            Experiment::Equality(_) => "equality",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressConfig {
    /// Universe size of the generated prior.
    pub n: usize,
    /// Entropy in bits of the generated truncated-geometric prior.
    pub entropy: f64,
    pub rho: f64,
    pub eps: f64,
    pub delta: f64,
    pub prior_gap: f64,
    pub kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_file: Option<PathBuf>,
}

impl Default for CompressConfig {
    fn default() -> Self {
        CompressConfig {
            n: 4096,
            entropy: 6.0,
            rho: 0.9,
            eps: 1.0,
            delta: 0.1,
            prior_gap: 1.0,
            kappa: crate::compress::DEFAULT_KAPPA,
            p_file: None,
            q_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgreeConfig {
    pub k: usize,
    pub rho: f64,
    /// Slack values; one output row each.
    pub eps: Vec<f64>,
    pub matrix: MatrixChoice,
    /// Also report the zero-communication first-k baseline.
    pub baseline: bool,
}

impl Default for AgreeConfig {
    fn default() -> Self {
        AgreeConfig {
            k: 24,
            rho: 0.98,
            eps: vec![0.1],
            matrix: MatrixChoice::default(),
            baseline: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    Literal,
    #[default]
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianConfig {
    pub q: f64,
    pub n: usize,
    pub rho: f64,
    pub t: usize,
    pub mode: ModeChoice,
    /// Constant of the literal threshold.
    pub alpha: f64,
    /// Instances per class used to calibrate the threshold.
    pub calibration_samples: u64,
    /// Odd number of repetitions combined by majority.
    pub reps: usize,
    pub backend: Backend,
    /// Thresholds; default `0.9/q` and `0.6/q`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Fixed instance file instead of sampled instances.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        GaussianConfig {
            q: 4.0,
            n: 1 << 16,
            rho: 0.9,
            t: 1024,
            mode: ModeChoice::Calibrated,
            alpha: crate::gapip::DEFAULT_ALPHA,
            calibration_samples: 400,
            reps: 1,
            backend: Backend::BlockSums,
            c: None,
            s: None,
            instance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparseConfig {
    pub q: f64,
    pub n: usize,
    /// Run the repeated protocol instead of single atomic rounds.
    pub repeated: bool,
    /// Repetitions of the repeated protocol; default `9·m²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
}

impl Default for SparseConfig {
    fn default() -> Self {
        SparseConfig {
            q: 16.0,
            n: 1 << 16,
            repeated: false,
            reps: None,
            c: None,
            s: None,
            instance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub k: usize,
    /// Monte Carlo samples per tree pair.
    pub samples: u64,
    pub deterministic: bool,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            k: 4,
            samples: 100_000,
            deterministic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfluenceConfig {
    pub n: usize,
    pub p: f64,
    pub d: usize,
    pub tau: f64,
    pub eta: f64,
}

impl Default for InfluenceConfig {
    fn default() -> Self {
        InfluenceConfig {
            n: 8,
            p: 0.5,
            d: 3,
            tau: 0.1,
            eta: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqualityConfig {
    /// Length of the compared strings.
    pub bits: usize,
    pub rho: f64,
    pub t: usize,
    pub reps: usize,
    pub calibration_samples: u64,
}

impl Default for EqualityConfig {
    fn default() -> Self {
        EqualityConfig {
            bits: 128,
            rho: 0.9,
            t: 1024,
            reps: 33,
            calibration_samples: 200,
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            trials: default_trials(),
            seed: 0,
            out: None,
            jobs: 0,
            format: OutputFormat::Csv,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form, with
    /// the fields that do not affect results (output path, thread count,
    /// format) left out.
    pub fn config_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Some(map) = v.as_object_mut() {
            for key in ["out", "jobs", "format"] {
                map.remove(key);
            }
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}
