use std::path::PathBuf;

use caml_core::linear::lr_predict_matrix;
use caml_core::metrics::{evaluate, MetricsError, PredictionMatrix};
use caml_core::training::{predict_matrix, TrainedModel};

use crate::formats::checkpoint::{load_checkpoint, verify_compatibility};
use crate::formats::dataset::{load_dataset, Dataset};
use crate::formats::manifest::ManifestBuilder;
use crate::formats::report::{render_table, ReportDto};
use crate::{CliError, Result};

pub struct EvaluateArgs {
    pub checkpoint: PathBuf,
    pub dataset: PathBuf,
    pub split: String,
    pub out_dir: PathBuf,
    pub threshold: Option<f64>,
    /// explicit precision@n cutoffs; None means the default {5, 8, 15}
    /// clipped to the label space
    pub p_at: Option<Vec<usize>>,
    pub seed: u64,
}

pub fn prediction_matrix_for(
    model: &TrainedModel,
    dataset: &Dataset,
    split: &str,
) -> Result<PredictionMatrix> {
    let docs = dataset.encoded(split)?;
    if docs.is_empty() {
        return Err(CliError::data(format!("split {split:?} is empty")));
    }
    Ok(match model {
        TrainedModel::Neural(params, kind) => predict_matrix(params, *kind, &docs),
        TrainedModel::Linear(params) => lr_predict_matrix(params, &docs),
    })
}

/// Scores a split with the checkpointed model and emits the evaluation
/// report as JSON plus a table on standard output.
pub fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("evaluate", args.seed);
    manifest.input(&args.checkpoint)?;
    for file in ["vocab.json", "labels.json"] {
        manifest.input(&args.dataset.join(file))?;
    }

    let dataset = load_dataset(&args.dataset)?;
    let checkpoint = load_checkpoint(&args.checkpoint)?;
    verify_compatibility(
        &checkpoint,
        dataset.vocab.fingerprint(),
        dataset.labels.fingerprint(),
    )?;

    let n_labels = dataset.labels.len();
    let cutoffs: Vec<usize> = match &args.p_at {
        Some(explicit) => {
            for &n in explicit {
                if n == 0 || n > n_labels {
                    return Err(MetricsError::InvalidN { n, n_labels }.into());
                }
            }
            explicit.clone()
        }
        None => [5usize, 8, 15]
            .into_iter()
            .filter(|&n| n <= n_labels)
            .collect(),
    };

    let mut pm = prediction_matrix_for(&checkpoint.model, &dataset, &args.split)?;
    if let Some(t) = args.threshold {
        pm = pm.with_threshold(t);
    }
    let report = evaluate(
        &pm,
        dataset.labels.codes(),
        &dataset.labels.kinds_by_index(),
        &cutoffs,
    );

    print!("{}", render_table(&report));
    std::fs::create_dir_all(&args.out_dir)?;
    let report_path = args.out_dir.join("report.json");
    crate::formats::write_atomic(
        &report_path,
        serde_json::to_string_pretty(&ReportDto::from(&report))?.as_bytes(),
    )?;
    manifest.config(serde_json::json!({
        "split": args.split,
        "threshold": args.threshold,
        "precision_at": cutoffs,
    }));
    manifest.output(report_path);
    manifest.write(&args.out_dir)
}
