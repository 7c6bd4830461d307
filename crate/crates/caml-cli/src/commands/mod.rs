//! Command implementations behind the five subcommands. Each takes parsed
//! arguments plus resolved settings, performs its work, and writes a run
//! manifest with input fingerprints into its output directory.

mod evaluate;
mod explain;
mod gradcheck;
mod preprocess;
mod train;

pub use evaluate::{run_evaluate, EvaluateArgs};
pub use explain::{run_explain, ExplainArgs};
pub use gradcheck::{run_gradcheck, GradcheckArgs, GradcheckOutcome};
pub use preprocess::{run_preprocess, PreprocessArgs};
pub use train::{run_train, TrainArgs};

use crate::config::Settings;

/// Resolved settings snapshot for the manifest.
pub(crate) fn settings_json(settings: &Settings) -> serde_json::Value {
    serde_json::json!({
        "model": settings.model.name(),
        "seed": settings.train.seed,
        "embed_dim": settings.train.embed_dim,
        "conv_dim": settings.train.conv_dim,
        "kernel": settings.train.kernel,
        "dropout": settings.train.dropout,
        "rho": settings.train.rho,
        "eta": settings.train.eta,
        "lambda": settings.train.lambda,
        "batch_size": settings.train.batch_size,
        "patience": settings.train.patience,
        "max_epochs": settings.train.max_epochs,
        "min_doc_freq": settings.min_doc_freq,
        "max_len": settings.max_len,
        "fractions": [
            settings.fractions.train,
            settings.fractions.valid,
            settings.fractions.test,
        ],
        "explain_k": settings.explain_k,
        "lr_epochs": settings.lr.epochs,
        "lr_step_size": settings.lr.step_size,
        "lr_l2": settings.lr.l2,
    })
}
