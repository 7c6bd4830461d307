use std::path::PathBuf;

use caml_core::corpus::{encode, split_by_group, tokenize, LabelSpace, RawDocument, Vocabulary};
use caml_core::numerics::Rng;

use crate::config::Settings;
use crate::formats::dataset::{write_dataset, Dataset, StoredDoc};
use crate::formats::{corpus_file, descriptions, manifest::ManifestBuilder};
use crate::{CliError, Result};

pub struct PreprocessArgs {
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    pub settings: Settings,
    pub config_path: Option<PathBuf>,
}

/// Reads the JSONL corpus, splits by group, builds the vocabulary from the
/// training split, encodes all three splits, attaches code descriptions,
/// and writes the dataset directory plus statistics.
pub fn run_preprocess(args: &PreprocessArgs) -> Result<()> {
    let settings = &args.settings;
    let seed = settings.train.seed;
    let mut manifest = ManifestBuilder::new("preprocess", seed);
    manifest.config(super::settings_json(settings));
    manifest.input(&args.corpus)?;
    if let Some(cfg) = &args.config_path {
        manifest.input(cfg)?;
    }

    let docs = corpus_file::read_corpus(&args.corpus)?;
    let space = LabelSpace::from_documents(&docs);
    let split_seed = Rng::new(seed).fork("split").next_u64();
    let (train_raw, valid_raw, test_raw) = split_by_group(docs, settings.fractions, split_seed)?;
    let vocab = Vocabulary::build(&train_raw, settings.min_doc_freq)?;

    let mut space = space;
    let mut description_text = vec![None; space.len()];
    let mut description_tokens = vec![None; space.len()];
    if let Some(desc_path) = &settings.descriptions {
        manifest.input(desc_path)?;
        let mut unknown = 0usize;
        let mut empty = 0usize;
        for (code, text) in descriptions::read_descriptions(desc_path)? {
            let Some(index) = space.index_of(&code) else {
                unknown += 1;
                continue;
            };
            let tokens = tokenize(&text);
            if tokens.is_empty() {
                empty += 1;
                continue;
            }
            let ids: Vec<usize> = tokens.iter().map(|t| vocab.index_of(t)).collect();
            space.set_description(&code, ids);
            description_text[index] = Some(text);
            description_tokens[index] = Some(tokens);
        }
        if unknown > 0 {
            eprintln!("warning: {unknown} description codes not present in the corpus; ignored");
        }
        if empty > 0 {
            eprintln!("warning: {empty} descriptions tokenized to nothing; ignored");
        }
    }

    let mut dropped_labels = 0usize;
    let mut encode_split = |raw: &[RawDocument]| -> Result<Vec<StoredDoc>> {
        raw.iter()
            .map(|doc| {
                let (encoded, dropped) = encode(doc, &vocab, &space, settings.max_len)
                    .map_err(|e| CliError::data(e.to_string()))?;
                dropped_labels += dropped;
                let mut tokens = tokenize(&doc.text);
                tokens.truncate(settings.max_len);
                Ok(StoredDoc { encoded, tokens })
            })
            .collect()
    };
    let train = encode_split(&train_raw)?;
    let valid = encode_split(&valid_raw)?;
    let test = encode_split(&test_raw)?;
    if dropped_labels > 0 {
        eprintln!("warning: {dropped_labels} document labels fell outside the label space");
    }

    let dataset = Dataset {
        vocab,
        labels: space,
        description_text,
        description_tokens,
        train,
        valid,
        test,
    };
    write_dataset(&args.out_dir, &dataset)?;

    let stats = dataset.compute_stats();
    println!(
        "vocabulary: {} tokens   labels: {}",
        stats.vocabulary_size, stats.total_labels
    );
    for (name, s) in &stats.splits {
        println!(
            "{name}: {} documents, {:.1} mean tokens, {:.2} mean labels",
            s.documents, s.mean_tokens_per_document, s.mean_labels_per_document
        );
    }

    for file in [
        "vocab.json",
        "labels.json",
        "train.jsonl",
        "valid.jsonl",
        "test.jsonl",
        "stats.json",
    ] {
        manifest.output(args.out_dir.join(file));
    }
    manifest.write(&args.out_dir)
}
