//! Run configuration: built-in defaults per model, overlaid by an optional
//! TOML or JSON config file, overlaid by command-line flags (flag > file >
//! default).

use std::path::{Path, PathBuf};

use caml_core::corpus::{SplitFractions, DEFAULT_MAX_LEN, DEFAULT_MIN_DOC_FREQ};
use caml_core::explain::DEFAULT_EXPLAIN_K;
use caml_core::linear::LrConfig;
use caml_core::model::ModelKind;
use caml_core::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelChoice {
    Caml,
    Cnn,
    Lr,
}

impl ModelChoice {
    pub fn parse(s: &str) -> Result<ModelChoice> {
        match s {
            "caml" => Ok(ModelChoice::Caml),
            "cnn" => Ok(ModelChoice::Cnn),
            "lr" => Ok(ModelChoice::Lr),
            other => Err(CliError::usage(format!(
                "unknown model {other:?}; expected caml, cnn, or lr"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelChoice::Caml => "caml",
            ModelChoice::Cnn => "cnn",
            ModelChoice::Lr => "lr",
        }
    }

    pub fn kind(&self) -> Option<ModelKind> {
        match self {
            ModelChoice::Caml => Some(ModelKind::Caml),
            ModelChoice::Cnn => Some(ModelKind::MaxPoolCnn),
            ModelChoice::Lr => None,
        }
    }
}

/// Every settable key, all optional; mirrors the training configuration
/// plus preprocessing and explanation knobs.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub embed_dim: Option<usize>,
    pub conv_dim: Option<usize>,
    pub kernel: Option<usize>,
    pub dropout: Option<f64>,
    pub rho: Option<f64>,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub max_epochs: Option<usize>,
    pub min_doc_freq: Option<u32>,
    pub max_len: Option<usize>,
    /// train/validation/test fractions, summing to 1
    pub fractions: Option<[f64; 3]>,
    pub explain_k: Option<usize>,
    pub lr_epochs: Option<usize>,
    pub lr_step_size: Option<f64>,
    pub lr_l2: Option<f64>,
    /// pretrained embeddings in word-per-line text format
    pub embeddings: Option<PathBuf>,
    /// code descriptions CSV
    pub descriptions: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read config {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        if is_toml {
            toml::from_str(&text)
                .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
        } else {
            serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
        }
    }
}

/// Flag-level overrides collected from the command line; same shape as the
/// file, so resolution is a single overlay chain.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub model: Option<ModelChoice>,
    pub seed: Option<u64>,
    pub embed_dim: Option<usize>,
    pub conv_dim: Option<usize>,
    pub kernel: Option<usize>,
    pub dropout: Option<f64>,
    pub rho: Option<f64>,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub max_epochs: Option<usize>,
    pub min_doc_freq: Option<u32>,
    pub max_len: Option<usize>,
    pub fractions: Option<[f64; 3]>,
    pub explain_k: Option<usize>,
    pub embeddings: Option<PathBuf>,
    pub descriptions: Option<PathBuf>,
}

/// The fully resolved run settings.
#[derive(Clone, Debug)]
pub struct Settings {
    pub model: ModelChoice,
    pub train: TrainConfig,
    pub lr: LrConfig,
    pub min_doc_freq: u32,
    pub max_len: usize,
    pub fractions: SplitFractions,
    pub explain_k: usize,
    pub embeddings: Option<PathBuf>,
    pub descriptions: Option<PathBuf>,
}

pub fn resolve(file: &FileConfig, flags: &Overrides) -> Result<Settings> {
    let model = match (&flags.model, &file.model) {
        (Some(m), _) => *m,
        (None, Some(s)) => ModelChoice::parse(s)?,
        (None, None) => ModelChoice::Caml,
    };
    let mut train = match model {
        ModelChoice::Cnn => TrainConfig::max_pool_defaults(),
        _ => TrainConfig::default(),
    };
    macro_rules! overlay {
        ($field:ident) => {
            if let Some(v) = file.$field {
                train.$field = v;
            }
            if let Some(v) = flags.$field {
                train.$field = v;
            }
        };
    }
    overlay!(seed);
    overlay!(embed_dim);
    overlay!(conv_dim);
    overlay!(kernel);
    overlay!(dropout);
    overlay!(rho);
    overlay!(eta);
    overlay!(lambda);
    overlay!(batch_size);
    overlay!(patience);
    overlay!(max_epochs);

    let lr = LrConfig {
        epochs: file.lr_epochs.unwrap_or(LrConfig::default().epochs),
        step_size: file.lr_step_size.unwrap_or(LrConfig::default().step_size),
        l2: file.lr_l2.unwrap_or(LrConfig::default().l2),
    };

    let fractions_raw = flags
        .fractions
        .or(file.fractions)
        .unwrap_or([0.8, 0.1, 0.1]);
    let fractions = SplitFractions::new(fractions_raw[0], fractions_raw[1], fractions_raw[2])
        .map_err(|e| CliError::usage(e.to_string()))?;

    Ok(Settings {
        model,
        train,
        lr,
        min_doc_freq: flags
            .min_doc_freq
            .or(file.min_doc_freq)
            .unwrap_or(DEFAULT_MIN_DOC_FREQ),
        max_len: flags.max_len.or(file.max_len).unwrap_or(DEFAULT_MAX_LEN),
        fractions,
        explain_k: flags
            .explain_k
            .or(file.explain_k)
            .unwrap_or(DEFAULT_EXPLAIN_K),
        embeddings: flags.embeddings.clone().or_else(|| file.embeddings.clone()),
        descriptions: flags
            .descriptions
            .clone()
            .or_else(|| file.descriptions.clone()),
    })
}
