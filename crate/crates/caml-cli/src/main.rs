//! The `caml` command line: preprocess, train, evaluate, explain, and
//! gradcheck. Global flags are --config, --seed, and --out-dir; flag
//! values override config-file values, which override built-in defaults.
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use caml_cli::commands::{
    run_evaluate, run_explain, run_gradcheck, run_preprocess, run_train, EvaluateArgs, ExplainArgs,
    GradcheckArgs, PreprocessArgs, TrainArgs,
};
use caml_cli::config::{resolve, FileConfig, ModelChoice, Overrides, Settings};
use caml_cli::{CliError, Result};
use caml_core::explain::ExplainMethod;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "caml",
    version,
    about = "Per-label attentional convolutional multi-label text classification"
)]
struct Cli {
    /// TOML or JSON config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// root seed for every random choice (split, init, dropout, shuffle, sampling)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory (default depends on the command)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ModelFlags {
    /// caml, cnn, or lr
    #[arg(long)]
    model: Option<String>,
    /// word-embedding size d_e
    #[arg(long)]
    embed_dim: Option<usize>,
    /// convolution output size d_c
    #[arg(long)]
    conv_dim: Option<usize>,
    /// convolution filter width k
    #[arg(long)]
    kernel: Option<usize>,
    /// embedding dropout probability q
    #[arg(long)]
    dropout: Option<f64>,
    /// squared-L2 penalty weight rho
    #[arg(long)]
    rho: Option<f64>,
    /// learning rate eta
    #[arg(long)]
    eta: Option<f64>,
    /// description-regularizer weight lambda
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// epochs without validation improvement before stopping
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a JSONL corpus into a dataset directory
    Preprocess {
        /// UTF-8 JSON lines, one document per line
        #[arg(long)]
        corpus: PathBuf,
        /// code descriptions CSV ("code,description")
        #[arg(long)]
        descriptions: Option<PathBuf>,
        /// retain tokens appearing in at least this many training documents
        #[arg(long)]
        min_doc_freq: Option<u32>,
        /// truncate documents to this many tokens
        #[arg(long)]
        max_len: Option<usize>,
        /// train,valid,test fractions summing to 1
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
    },
    /// Train a model on a preprocessed dataset
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// pretrained embeddings in word-per-line text format
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Score a split and report micro/macro P/R/F1, AUC, and P@n
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// decision threshold for the counted metrics
        #[arg(long)]
        threshold: Option<f64>,
        /// precision@n cutoffs (default 5,8,15 clipped to the label count)
        #[arg(long, value_delimiter = ',')]
        p_at: Option<Vec<usize>>,
    },
    /// Write blinded review sheets for sampled predictions
    Explain {
        /// primary neural checkpoint (sampling source)
        #[arg(long)]
        checkpoint: PathBuf,
        /// max-pool CNN checkpoint for the importance method
        #[arg(long)]
        cnn_checkpoint: Option<PathBuf>,
        #[arg(long)]
        lr_checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// number of (document, label) pairs to sample
        #[arg(long, default_value_t = 10)]
        sample: usize,
        /// subset of methods: attention,maxpool,lr,cosine
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// explanation gram length
        #[arg(long)]
        explain_k: Option<usize>,
    },
    /// Check analytic gradients against finite differences on a tiny model
    Gradcheck {
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        /// test hook: corrupt one gradient tensor; the check must fail
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn load_settings(cli: &Cli, overrides: Overrides) -> Result<(Settings, Option<PathBuf>)> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut overrides = overrides;
    if overrides.seed.is_none() {
        overrides.seed = cli.seed;
    }
    let settings = resolve(&file, &overrides)?;
    Ok((settings, cli.config.clone()))
}

fn out_dir(cli: &Cli, default: &str) -> PathBuf {
    cli.out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(default))
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess {
            corpus,
            descriptions,
            min_doc_freq,
            max_len,
            fractions,
        } => {
            let fractions = fractions
                .as_ref()
                .map(|f| {
                    <[f64; 3]>::try_from(f.as_slice()).map_err(|_| {
                        CliError::usage(format!(
                            "--fractions needs exactly three values, got {}",
                            f.len()
                        ))
                    })
                })
                .transpose()?;
            let overrides = Overrides {
                min_doc_freq: *min_doc_freq,
                max_len: *max_len,
                fractions,
                descriptions: descriptions.clone(),
                ..Default::default()
            };
            let (settings, config_path) = load_settings(&cli, overrides)?;
            run_preprocess(&PreprocessArgs {
                corpus: corpus.clone(),
                out_dir: out_dir(&cli, "dataset"),
                settings,
                config_path,
            })
        }
        Command::Train {
            dataset,
            embeddings,
            model,
        } => {
            let overrides = Overrides {
                model: model.model.as_deref().map(ModelChoice::parse).transpose()?,
                embed_dim: model.embed_dim,
                conv_dim: model.conv_dim,
                kernel: model.kernel,
                dropout: model.dropout,
                rho: model.rho,
                eta: model.eta,
                lambda: model.lambda,
                batch_size: model.batch_size,
                patience: model.patience,
                max_epochs: model.max_epochs,
                embeddings: embeddings.clone(),
                ..Default::default()
            };
            let (settings, config_path) = load_settings(&cli, overrides)?;
            run_train(&TrainArgs {
                dataset: dataset.clone(),
                out_dir: out_dir(&cli, "run"),
                settings,
                config_path,
            })
            .map(|_| ())
        }
        Command::Evaluate {
            checkpoint,
            dataset,
            split,
            threshold,
            p_at,
        } => {
            let (settings, _) = load_settings(&cli, Overrides::default())?;
            run_evaluate(&EvaluateArgs {
                checkpoint: checkpoint.clone(),
                dataset: dataset.clone(),
                split: split.clone(),
                out_dir: out_dir(&cli, "eval"),
                threshold: *threshold,
                p_at: p_at.clone(),
                seed: settings.train.seed,
            })
        }
        Command::Explain {
            checkpoint,
            cnn_checkpoint,
            lr_checkpoint,
            dataset,
            split,
            sample,
            methods,
            explain_k,
        } => {
            let overrides = Overrides {
                explain_k: *explain_k,
                ..Default::default()
            };
            let (settings, _) = load_settings(&cli, overrides)?;
            let methods = methods
                .as_ref()
                .map(|names| {
                    names
                        .iter()
                        .map(|n| {
                            ExplainMethod::parse(n).ok_or_else(|| {
                                CliError::usage(format!(
                                    "unknown method {n:?}; expected attention, maxpool, lr, or cosine"
                                ))
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?;
            run_explain(&ExplainArgs {
                checkpoint: checkpoint.clone(),
                cnn_checkpoint: cnn_checkpoint.clone(),
                lr_checkpoint: lr_checkpoint.clone(),
                dataset: dataset.clone(),
                split: split.clone(),
                sample: *sample,
                methods,
                explain_k: settings.explain_k,
                seed: settings.train.seed,
                out_dir: out_dir(&cli, "sheets"),
            })
        }
        Command::Gradcheck {
            tolerance,
            epsilon,
            inject_fault,
        } => {
            let (settings, _) = load_settings(&cli, Overrides::default())?;
            run_gradcheck(&GradcheckArgs {
                tolerance: *tolerance,
                epsilon: *epsilon,
                seed: settings.train.seed,
                inject_fault: *inject_fault,
            })
            .map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
