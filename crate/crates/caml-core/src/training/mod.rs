//! Loss assembly, Adam optimization, early stopping on validation
//! precision@8, and the training loop.

mod adam;
mod loss;

pub use adam::{AdamHyper, AdamState};
pub use loss::{bce_loss, desc_penalty, l2_penalty, loss, LossConfig, LossTerms, CLAMP};

use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{EmbeddingTable, EncodedDocument};
use crate::linear::LrParams;
use crate::metrics::{precision_at_n, PredictionMatrix};
use crate::model::{
    backward, dropout_mask, forward, predict, CamlParams, ModelDims, ModelError, ModelKind,
};
use crate::numerics::{Matrix, Rng};

/// Everything the trainer needs to know besides the data. Defaults follow
/// the tuned values for the attention model; `max_pool_defaults` switches
/// to the vanilla-CNN values (more filters, narrower window, faster rate).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub model_kind: ModelKind,
    /// word-embedding size d_e
    pub embed_dim: usize,
    /// filter-output size d_c
    pub conv_dim: usize,
    /// filter width k
    pub kernel: usize,
    /// embedding dropout probability q
    pub dropout: f64,
    /// squared-L2 penalty weight rho
    pub rho: f64,
    /// learning rate eta
    pub eta: f64,
    /// description-regularizer weight lambda (0 = disabled)
    pub lambda: f64,
    pub batch_size: usize,
    /// epochs without validation improvement before stopping
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model_kind: ModelKind::Caml,
            embed_dim: 100,
            conv_dim: 50,
            kernel: 10,
            dropout: 0.2,
            rho: 0.0,
            eta: 0.0001,
            lambda: 0.0,
            batch_size: 16,
            patience: 10,
            max_epochs: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn max_pool_defaults() -> Self {
        TrainConfig {
            model_kind: ModelKind::MaxPoolCnn,
            conv_dim: 500,
            kernel: 4,
            eta: 0.003,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(TrainError::InvalidConfig("dropout must be in [0, 1)"));
        }
        if self.eta <= 0.0 {
            return Err(TrainError::InvalidConfig("learning rate must be positive"));
        }
        if self.lambda < 0.0 || self.rho < 0.0 {
            return Err(TrainError::InvalidConfig(
                "penalty weights must be non-negative",
            ));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(TrainError::InvalidConfig(
                "batch size and max epochs must be positive",
            ));
        }
        if self.embed_dim == 0 || self.conv_dim == 0 || self.kernel == 0 {
            return Err(TrainError::InvalidConfig(
                "model dimensions must be positive",
            ));
        }
        Ok(())
    }

    pub fn dims(&self, vocab_size: usize, n_labels: usize) -> ModelDims {
        ModelDims {
            vocab_size,
            embed_dim: self.embed_dim,
            conv_dim: self.conv_dim,
            kernel: self.kernel,
            n_labels,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainError {
    InvalidConfig(&'static str),
    EmptySplit(&'static str),
    /// loss became NaN or infinite; coordinates are 1-based epoch and
    /// 0-based batch index within the epoch
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
    },
    Model(ModelError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            TrainError::EmptySplit(which) => write!(f, "{which} split is empty"),
            TrainError::NonFiniteLoss { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
            TrainError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for TrainError {}

impl From<ModelError> for TrainError {
    fn from(e: ModelError) -> Self {
        TrainError::Model(e)
    }
}

/// Tracks the best validation score and decides when to stop: training
/// halts once `patience` epochs pass without strict improvement (ties keep
/// the earlier epoch).
#[derive(Clone, Debug)]
pub struct EarlyStopper {
    patience: usize,
    best: Option<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        EarlyStopper {
            patience,
            best: None,
        }
    }

    /// Feeds one epoch's validation score; epochs must arrive in order.
    pub fn observe(&mut self, epoch: usize, score: f64) -> StopDecision {
        match self.best {
            Some((_, best_score)) if score <= best_score => {}
            _ => self.best = Some((epoch, score)),
        }
        let (best_epoch, _) = self.best.expect("just set");
        if epoch - best_epoch >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

/// The data and lookups for one training run.
pub struct TrainSession<'a> {
    pub train: &'a [EncodedDocument],
    pub valid: &'a [EncodedDocument],
    pub vocab_size: usize,
    pub n_labels: usize,
    /// per-label-index description token ids; required when lambda > 0
    pub descriptions: Option<&'a [Option<Vec<usize>>]>,
    pub pretrained: Option<&'a EmbeddingTable>,
    pub vocab_fingerprint: u64,
    pub label_fingerprint: u64,
}

/// The trained model of a checkpoint.
#[allow(clippy::large_enum_variant)] // linear params dwarf the tag either way
#[derive(Clone, Debug)]
pub enum TrainedModel {
    Neural(CamlParams, ModelKind),
    Linear(LrParams),
}

/// The unit of persistence: the winning parameters plus enough metadata to
/// refuse evaluation against a mismatched vocabulary or label space.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: TrainedModel,
    pub vocab_fingerprint: u64,
    pub label_fingerprint: u64,
    pub config: TrainConfig,
    pub best_val_p8: f64,
    pub epoch: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_p8: f64,
}

pub struct TrainOutcome {
    /// the best-validation-P@8 epoch's parameters (ties keep the earliest)
    pub checkpoint: Checkpoint,
    /// the last epoch's parameters, regardless of validation score
    pub final_params: CamlParams,
    pub history: Vec<EpochStats>,
}

/// Scores every document with the model; rows are documents, columns
/// labels. Dropout is off.
pub fn predict_matrix(
    params: &CamlParams,
    kind: ModelKind,
    docs: &[EncodedDocument],
) -> PredictionMatrix {
    let n_labels = params.dims.n_labels;
    let mut scores = Matrix::zeros(docs.len(), n_labels);
    let mut truth = Vec::with_capacity(docs.len() * n_labels);
    for (i, doc) in docs.iter().enumerate() {
        let yhat = predict(&doc.token_ids, params, kind);
        scores.row_mut(i).copy_from_slice(&yhat);
        truth.extend_from_slice(&doc.label_vector);
    }
    PredictionMatrix::new(scores, truth).expect("predictions are finite and well-shaped")
}

/// The precision@n cutoff used for early stopping: 8, clamped for tiny
/// label spaces. P@n is constant whenever n = |L| (the top n cover every
/// label), so spaces of 8 or fewer labels fall back to |L|-1 to keep the
/// signal informative.
pub fn early_stopping_cutoff(n_labels: usize) -> usize {
    8.min(n_labels.saturating_sub(1)).max(1)
}

/// Validation precision@8, the early-stopping criterion.
pub fn validation_p8(params: &CamlParams, kind: ModelKind, valid: &[EncodedDocument]) -> f64 {
    let pm = predict_matrix(params, kind, valid);
    precision_at_n(&pm, early_stopping_cutoff(params.dims.n_labels))
        .expect("cutoff clamped to label count")
}

/// Minibatch training with seeded shuffling, Adam, and early stopping on
/// validation precision@8. Returns the checkpoint of the best epoch.
///
/// Epochs iterate seeded shuffles of the training set in batches of
/// `batch_size` (the last partial batch is used). Per-batch gradients are
/// the mean of per-document gradients accumulated in batch order, so runs
/// are bit-reproducible for a fixed seed.
pub fn train(session: &TrainSession, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_with(session, config, |_| {})
}

/// Same as [`train`] but reports each epoch's stats as they complete.
pub fn train_with(
    session: &TrainSession,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if session.train.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    if session.valid.is_empty() {
        return Err(TrainError::EmptySplit("valid"));
    }
    if config.lambda > 0.0 {
        // fail fast: every label observed positive in training needs a description
        for doc in session.train {
            for label in doc.positive_labels() {
                let present = session
                    .descriptions
                    .map(|d| d[label].is_some())
                    .unwrap_or(false);
                if !present {
                    return Err(ModelError::MissingDescription { label_index: label }.into());
                }
            }
        }
    }

    let root = Rng::new(config.seed);
    let dims = config.dims(session.vocab_size, session.n_labels);
    let with_desc = session.descriptions.is_some();
    let mut params = CamlParams::init(dims, session.pretrained, with_desc, &root.fork("init"));
    let mut shuffle_rng = root.fork("shuffle");
    let mut dropout_rng = root.fork("dropout");
    let mut adam = AdamState::new(&params, AdamHyper::default());
    let mut stopper = EarlyStopper::new(config.patience);
    let loss_cfg = LossConfig {
        lambda: config.lambda,
        rho: config.rho,
        descriptions: session.descriptions,
    };

    let mut history = Vec::new();
    let mut best: Option<(usize, f64, CamlParams)> = None;
    let mut order: Vec<usize> = (0..session.train.len()).collect();

    for epoch in 1..=config.max_epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let mut batch_grads = params.zeros_like();
            let mut batch_loss = 0.0;
            for &doc_idx in batch {
                let doc = &session.train[doc_idx];
                let mask = (config.dropout > 0.0)
                    .then(|| dropout_mask(doc.len(), config.dropout, &mut dropout_rng));
                let trace = forward(&doc.token_ids, &params, config.model_kind, mask);
                let (terms, grads) = backward(&trace, &params, &doc.label_vector, &loss_cfg)?;
                batch_loss += terms.total();
                batch_grads.add_scaled(&grads, 1.0);
            }
            let scale = 1.0 / batch.len() as f64;
            batch_grads.scale(scale);
            let mean_loss = batch_loss * scale;
            if !mean_loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            adam.step(&mut params, &batch_grads, config.eta);
            epoch_loss += mean_loss;
            n_batches += 1;
        }
        let val_p8 = validation_p8(&params, config.model_kind, session.valid);
        let stats = EpochStats {
            epoch,
            train_loss: epoch_loss / n_batches as f64,
            val_p8,
        };
        history.push(stats);
        on_epoch(&stats);
        let improved = best.as_ref().is_none_or(|(_, score, _)| val_p8 > *score);
        if improved {
            best = Some((epoch, val_p8, params.clone()));
        }
        if stopper.observe(epoch, val_p8) == StopDecision::Stop {
            break;
        }
    }

    let (epoch, best_val_p8, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model: TrainedModel::Neural(best_params, config.model_kind),
            vocab_fingerprint: session.vocab_fingerprint,
            label_fingerprint: session.label_fingerprint,
            config: config.clone(),
            best_val_p8,
            epoch,
        },
        final_params: params,
        history,
    })
}
