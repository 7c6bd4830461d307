use std::path::PathBuf;

use caml_core::linear::{lr_predict_matrix, lr_train};
use caml_core::metrics::precision_at_n;
use caml_core::numerics::Rng;
use caml_core::training::{
    early_stopping_cutoff, train_with, Checkpoint, EpochStats, TrainSession, TrainedModel,
};
use serde::Serialize;

use crate::config::{ModelChoice, Settings};
use crate::formats::checkpoint::save_checkpoint;
use crate::formats::dataset::load_dataset;
use crate::formats::embeddings::load_embeddings;
use crate::formats::manifest::ManifestBuilder;
use crate::{CliError, Result};

pub struct TrainArgs {
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    pub settings: Settings,
    pub config_path: Option<PathBuf>,
}

pub const CHECKPOINT_FILE: &str = "checkpoint.caml";

#[derive(Serialize)]
struct HistoryRow {
    epoch: usize,
    train_loss: f64,
    val_p8: f64,
}

/// Trains the selected model on the preprocessed dataset and writes the
/// best-epoch checkpoint, the epoch history, and a manifest.
pub fn run_train(args: &TrainArgs) -> Result<PathBuf> {
    let settings = &args.settings;
    let seed = settings.train.seed;
    let mut manifest = ManifestBuilder::new("train", seed);
    manifest.config(super::settings_json(settings));
    if let Some(cfg) = &args.config_path {
        manifest.input(cfg)?;
    }
    for file in ["vocab.json", "labels.json", "train.jsonl", "valid.jsonl"] {
        manifest.input(&args.dataset.join(file))?;
    }

    let dataset = load_dataset(&args.dataset)?;
    let vocab_fingerprint = dataset.vocab.fingerprint();
    let label_fingerprint = dataset.labels.fingerprint();
    let train_docs = dataset.encoded("train")?;
    let valid_docs = dataset.encoded("valid")?;
    let n_labels = dataset.labels.len();

    let (checkpoint, history) = match settings.model {
        ModelChoice::Lr => {
            let result = lr_train(&train_docs, dataset.vocab.len(), n_labels, &settings.lr);
            let pm = lr_predict_matrix(&result.params, &valid_docs);
            let p8 = precision_at_n(&pm, early_stopping_cutoff(n_labels))?;
            println!("lr: {} epochs, validation P@8 {p8:.4}", settings.lr.epochs);
            let history: Vec<HistoryRow> = result
                .loss_history
                .iter()
                .enumerate()
                .map(|(i, &loss)| HistoryRow {
                    epoch: i + 1,
                    train_loss: loss,
                    val_p8: f64::NAN,
                })
                .collect();
            (
                Checkpoint {
                    model: TrainedModel::Linear(result.params),
                    vocab_fingerprint,
                    label_fingerprint,
                    config: settings.train.clone(),
                    best_val_p8: p8,
                    epoch: settings.lr.epochs,
                },
                history,
            )
        }
        ModelChoice::Caml | ModelChoice::Cnn => {
            let pretrained = match &settings.embeddings {
                Some(path) => {
                    manifest.input(path)?;
                    let mut rng = Rng::new(seed).fork("embed-init");
                    Some(load_embeddings(
                        path,
                        &dataset.vocab,
                        settings.train.embed_dim,
                        &mut rng,
                    )?)
                }
                None => None,
            };
            if settings.train.lambda > 0.0 && !dataset.has_descriptions() {
                return Err(CliError::data(
                    "lambda > 0 requires code descriptions in the dataset (preprocess with --descriptions)"
                        .to_string(),
                ));
            }
            let descriptions = dataset.description_ids();
            let session = TrainSession {
                train: &train_docs,
                valid: &valid_docs,
                vocab_size: dataset.vocab.len(),
                n_labels,
                descriptions: dataset.has_descriptions().then_some(&descriptions[..]),
                pretrained: pretrained.as_ref(),
                vocab_fingerprint,
                label_fingerprint,
            };
            let outcome = train_with(&session, &settings.train, |stats: &EpochStats| {
                println!(
                    "epoch {:>3}  train loss {:.5}  validation P@8 {:.4}",
                    stats.epoch, stats.train_loss, stats.val_p8
                );
            })?;
            println!(
                "best epoch {} with validation P@8 {:.4}",
                outcome.checkpoint.epoch, outcome.checkpoint.best_val_p8
            );
            let history = outcome
                .history
                .iter()
                .map(|e| HistoryRow {
                    epoch: e.epoch,
                    train_loss: e.train_loss,
                    val_p8: e.val_p8,
                })
                .collect();
            (outcome.checkpoint, history)
        }
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let checkpoint_path = args.out_dir.join(CHECKPOINT_FILE);
    save_checkpoint(&checkpoint_path, &checkpoint)?;
    crate::formats::write_atomic(
        &args.out_dir.join("history.json"),
        serde_json::to_string_pretty(&history)?.as_bytes(),
    )?;
    manifest.output(checkpoint_path.clone());
    manifest.output(args.out_dir.join("history.json"));
    manifest.write(&args.out_dir)?;
    Ok(checkpoint_path)
}
