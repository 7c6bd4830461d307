use std::path::PathBuf;

use caml_core::explain::{
    build_review_sheet, explain_attention, explain_cosine, explain_lr, explain_maxpool,
    ExplainMethod, IdfTable, Snippet,
};
use caml_core::linear::LrParams;
use caml_core::model::{forward, CamlParams, ModelKind};
use caml_core::numerics::Rng;
use caml_core::training::TrainedModel;

use crate::formats::checkpoint::{load_checkpoint, verify_compatibility};
use crate::formats::dataset::{load_dataset, Dataset};
use crate::formats::manifest::ManifestBuilder;
use crate::formats::sheets::{write_blind_key, write_sheet};
use crate::{CliError, Result};

pub struct ExplainArgs {
    /// primary neural checkpoint; the sampling source
    pub checkpoint: PathBuf,
    /// optional second neural checkpoint for max-pool importance
    pub cnn_checkpoint: Option<PathBuf>,
    pub lr_checkpoint: Option<PathBuf>,
    pub dataset: PathBuf,
    pub split: String,
    pub sample: usize,
    /// restrict to these methods; None means every available one
    pub methods: Option<Vec<ExplainMethod>>,
    pub explain_k: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

struct Loaded {
    caml: Option<CamlParams>,
    maxpool: Option<CamlParams>,
    lr: Option<LrParams>,
    primary_kind: ModelKind,
}

fn load_models(args: &ExplainArgs, dataset: &Dataset) -> Result<Loaded> {
    let vocab_fp = dataset.vocab.fingerprint();
    let label_fp = dataset.labels.fingerprint();
    let primary = load_checkpoint(&args.checkpoint)?;
    verify_compatibility(&primary, vocab_fp, label_fp)?;
    let (caml, mut maxpool, primary_kind) = match primary.model {
        TrainedModel::Neural(params, ModelKind::Caml) => (Some(params), None, ModelKind::Caml),
        TrainedModel::Neural(params, ModelKind::MaxPoolCnn) => {
            (None, Some(params), ModelKind::MaxPoolCnn)
        }
        TrainedModel::Linear(_) => {
            return Err(CliError::data(
                "--checkpoint must be a neural model; pass the LR model via --lr-checkpoint"
                    .to_string(),
            ))
        }
    };
    if let Some(path) = &args.cnn_checkpoint {
        if primary_kind == ModelKind::MaxPoolCnn {
            return Err(CliError::usage(
                "--checkpoint already holds a max-pool CNN; --cnn-checkpoint is redundant"
                    .to_string(),
            ));
        }
        let ck = load_checkpoint(path)?;
        verify_compatibility(&ck, vocab_fp, label_fp)?;
        match ck.model {
            TrainedModel::Neural(params, ModelKind::MaxPoolCnn) => maxpool = Some(params),
            _ => {
                return Err(CliError::data(
                    "--cnn-checkpoint must hold a max-pool CNN model".to_string(),
                ))
            }
        }
    }
    let mut lr = None;
    if let Some(path) = &args.lr_checkpoint {
        let ck = load_checkpoint(path)?;
        verify_compatibility(&ck, vocab_fp, label_fp)?;
        match ck.model {
            TrainedModel::Linear(params) => lr = Some(params),
            _ => {
                return Err(CliError::data(
                    "--lr-checkpoint must hold a logistic-regression model".to_string(),
                ))
            }
        }
    }
    Ok(Loaded {
        caml,
        maxpool,
        lr,
        primary_kind,
    })
}

fn resolve_methods(
    requested: &Option<Vec<ExplainMethod>>,
    loaded: &Loaded,
    dataset: &Dataset,
) -> Result<Vec<ExplainMethod>> {
    let mut available = Vec::new();
    if loaded.caml.is_some() {
        available.push(ExplainMethod::Attention);
    }
    if loaded.maxpool.is_some() {
        available.push(ExplainMethod::MaxPoolImportance);
    }
    if loaded.lr.is_some() {
        available.push(ExplainMethod::LrWeights);
    }
    if dataset.has_descriptions() {
        available.push(ExplainMethod::CosineSim);
    }
    match requested {
        None => Ok(available),
        Some(methods) => {
            let mut methods = methods.clone();
            methods.sort();
            methods.dedup();
            for m in &methods {
                if !available.contains(m) {
                    let need = match m {
                        ExplainMethod::Attention => "an attention-model checkpoint",
                        ExplainMethod::MaxPoolImportance => "a max-pool CNN checkpoint",
                        ExplainMethod::LrWeights => "--lr-checkpoint",
                        ExplainMethod::CosineSim => "code descriptions in the dataset",
                    };
                    return Err(CliError::data(format!(
                        "method {:?} requires {need}",
                        m.name()
                    )));
                }
            }
            Ok(methods)
        }
    }
}

/// Samples predicted (document, label) pairs and writes one anonymized
/// review sheet per pair, plus a single blind key for the whole run.
pub fn run_explain(args: &ExplainArgs) -> Result<()> {
    if args.sample == 0 {
        return Err(CliError::usage("--sample must be at least 1".to_string()));
    }
    let mut manifest = ManifestBuilder::new("explain", args.seed);
    manifest.input(&args.checkpoint)?;
    for p in [&args.cnn_checkpoint, &args.lr_checkpoint]
        .into_iter()
        .flatten()
    {
        manifest.input(p)?;
    }

    let dataset = load_dataset(&args.dataset)?;
    let loaded = load_models(args, &dataset)?;
    let methods = resolve_methods(&args.methods, &loaded, &dataset)?;
    if methods.len() < 2 {
        return Err(CliError::data(format!(
            "review sheets need at least two methods; only {:?} is available",
            methods.first().map(|m| m.name()).unwrap_or("none")
        )));
    }

    let docs = dataset.split(&args.split)?;
    if docs.is_empty() {
        return Err(CliError::data(format!("split {:?} is empty", args.split)));
    }

    // pool of predicted pairs under the primary model
    let primary_params = match loaded.primary_kind {
        ModelKind::Caml => loaded.caml.as_ref().expect("primary is caml"),
        ModelKind::MaxPoolCnn => loaded.maxpool.as_ref().expect("primary is cnn"),
    };
    let mut pool: Vec<(usize, usize)> = Vec::new();
    for (doc_idx, doc) in docs.iter().enumerate() {
        let yhat =
            caml_core::model::predict(&doc.encoded.token_ids, primary_params, loaded.primary_kind);
        for (label, &score) in yhat.iter().enumerate() {
            if score > 0.5 {
                pool.push((doc_idx, label));
            }
        }
    }
    if pool.is_empty() {
        return Err(CliError::data(
            "the model predicts no (document, label) pairs above 0.5 on this split".to_string(),
        ));
    }
    let mut rng = Rng::new(args.seed).fork("sample");
    let picks = rng.sample_indices(pool.len(), args.sample);

    // idf over all notes and all descriptions
    let idf = methods.contains(&ExplainMethod::CosineSim).then(|| {
        let mut table = IdfTable::new();
        for split in ["train", "valid", "test"] {
            for doc in dataset.split(split).expect("fixed split names") {
                table.add_document(&doc.tokens);
            }
        }
        for tokens in dataset.description_tokens.iter().flatten() {
            table.add_document(tokens);
        }
        table
    });

    std::fs::create_dir_all(&args.out_dir)?;
    let mut keys = Vec::new();
    let mut skipped = 0usize;
    for (sheet_idx, &pick) in picks.iter().enumerate() {
        let (doc_idx, label) = pool[pick];
        let doc = &docs[doc_idx];
        let mut snippets: Vec<Snippet> = Vec::new();
        for method in &methods {
            match method {
                ExplainMethod::Attention => {
                    let params = loaded.caml.as_ref().expect("checked by resolve_methods");
                    let trace = forward(&doc.encoded.token_ids, params, ModelKind::Caml, None);
                    snippets.push(explain_attention(
                        &trace,
                        label,
                        args.explain_k,
                        &doc.tokens,
                    ));
                }
                ExplainMethod::MaxPoolImportance => {
                    let params = loaded.maxpool.as_ref().expect("checked by resolve_methods");
                    let trace =
                        forward(&doc.encoded.token_ids, params, ModelKind::MaxPoolCnn, None);
                    snippets.push(explain_maxpool(
                        &trace,
                        label,
                        &params.out_weight,
                        args.explain_k,
                        &doc.tokens,
                    ));
                }
                ExplainMethod::LrWeights => {
                    let params = loaded.lr.as_ref().expect("checked by resolve_methods");
                    snippets.push(explain_lr(
                        &doc.tokens,
                        label,
                        params,
                        &dataset.vocab,
                        args.explain_k,
                    ));
                }
                ExplainMethod::CosineSim => {
                    // pairs with no positive-similarity gram are dropped
                    // for this method only
                    if let Some(desc_tokens) = &dataset.description_tokens[label] {
                        if let Some(snippet) = explain_cosine(
                            &doc.tokens,
                            label,
                            desc_tokens,
                            idf.as_ref().expect("idf built when cosine is active"),
                            args.explain_k,
                        ) {
                            snippets.push(snippet);
                        }
                    }
                }
            }
        }
        if snippets.len() < 2 {
            skipped += 1;
            continue;
        }
        let code = dataset.labels.code(label);
        let (sheet, key) = build_review_sheet(
            &doc.encoded.doc_id,
            code,
            dataset.description_text[label].as_deref(),
            &snippets,
            args.seed.wrapping_add(sheet_idx as u64),
        )?;
        let stem = format!("sheet_{sheet_idx:03}");
        write_sheet(&args.out_dir, &stem, &sheet)?;
        manifest.output(args.out_dir.join(format!("{stem}.md")));
        keys.push((stem, key));
    }
    if keys.is_empty() {
        return Err(CliError::data(
            "no (document, label) pair yielded snippets from two or more methods".to_string(),
        ));
    }
    write_blind_key(&args.out_dir, &keys)?;
    manifest.output(args.out_dir.join("blind_key.json"));
    println!(
        "wrote {} review sheets to {} ({} pairs skipped)",
        keys.len(),
        args.out_dir.display(),
        skipped
    );
    manifest.config(serde_json::json!({
        "split": args.split,
        "sample": args.sample,
        "explain_k": args.explain_k,
        "methods": methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
    }));
    manifest.write(&args.out_dir)
}
