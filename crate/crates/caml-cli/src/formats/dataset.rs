//! The preprocessed dataset directory: vocabulary, label space, encoded
//! splits (with the kept tokens, which the explainers need verbatim), and
//! corpus statistics. All files are deterministic functions of the inputs,
//! so a rerun is byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use caml_core::corpus::{EncodedDocument, LabelKind, LabelSpace, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const VOCAB_FILE: &str = "vocab.json";
pub const LABELS_FILE: &str = "labels.json";
pub const STATS_FILE: &str = "stats.json";

#[derive(Serialize, Deserialize)]
struct VocabFile {
    min_doc_freq: u32,
    tokens: Vec<String>,
    doc_freq: BTreeMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct LabelEntry {
    code: String,
    kind: Option<String>,
    description_text: Option<String>,
    description_tokens: Option<Vec<String>>,
    description_ids: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct DocLine {
    doc_id: String,
    tokens: Vec<String>,
    token_ids: Vec<usize>,
    /// indices of positive labels in the label space
    labels: Vec<usize>,
}

#[derive(Clone, Serialize, Deserialize, PartialEq, Debug)]
pub struct SplitStats {
    pub documents: usize,
    pub mean_tokens_per_document: f64,
    pub mean_labels_per_document: f64,
}

#[derive(Clone, Serialize, Deserialize, PartialEq, Debug)]
pub struct Stats {
    pub vocabulary_size: usize,
    pub total_labels: usize,
    pub splits: BTreeMap<String, SplitStats>,
}

/// One encoded document plus its kept tokens (tokens are what snippets and
/// contexts are reconstructed from).
#[derive(Clone, Debug)]
pub struct StoredDoc {
    pub encoded: EncodedDocument,
    pub tokens: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub vocab: Vocabulary,
    pub labels: LabelSpace,
    /// human-readable description per label index
    pub description_text: Vec<Option<String>>,
    /// tokenized description per label index
    pub description_tokens: Vec<Option<Vec<String>>>,
    pub train: Vec<StoredDoc>,
    pub valid: Vec<StoredDoc>,
    pub test: Vec<StoredDoc>,
}

impl Dataset {
    pub fn split(&self, name: &str) -> Result<&[StoredDoc]> {
        match name {
            "train" => Ok(&self.train),
            "valid" => Ok(&self.valid),
            "test" => Ok(&self.test),
            other => Err(CliError::usage(format!(
                "unknown split {other:?}; expected train, valid, or test"
            ))),
        }
    }

    pub fn encoded(&self, name: &str) -> Result<Vec<EncodedDocument>> {
        Ok(self
            .split(name)?
            .iter()
            .map(|d| d.encoded.clone())
            .collect())
    }

    /// Description token-id sequences aligned to label index, for the
    /// description regularizer.
    pub fn description_ids(&self) -> Vec<Option<Vec<usize>>> {
        self.labels.descriptions_by_index()
    }

    pub fn has_descriptions(&self) -> bool {
        self.description_tokens.iter().any(|d| d.is_some())
    }

    pub fn compute_stats(&self) -> Stats {
        let mut splits = BTreeMap::new();
        for (name, docs) in [
            ("train", &self.train),
            ("valid", &self.valid),
            ("test", &self.test),
        ] {
            let n = docs.len();
            let tokens: usize = docs.iter().map(|d| d.encoded.len()).sum();
            let labels: usize = docs
                .iter()
                .map(|d| d.encoded.positive_labels().count())
                .sum();
            splits.insert(
                name.to_string(),
                SplitStats {
                    documents: n,
                    mean_tokens_per_document: tokens as f64 / n.max(1) as f64,
                    mean_labels_per_document: labels as f64 / n.max(1) as f64,
                },
            );
        }
        Stats {
            vocabulary_size: self.vocab.len(),
            total_labels: self.labels.len(),
            splits,
        }
    }
}

fn kind_str(kind: Option<LabelKind>) -> Option<String> {
    kind.map(|k| {
        match k {
            LabelKind::Diagnosis => "diagnosis",
            LabelKind::Procedure => "procedure",
        }
        .to_string()
    })
}

fn kind_from_str(s: &str) -> Option<LabelKind> {
    match s {
        "diagnosis" => Some(LabelKind::Diagnosis),
        "procedure" => Some(LabelKind::Procedure),
        _ => None,
    }
}

pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let vocab_file = VocabFile {
        min_doc_freq: dataset.vocab.min_doc_freq(),
        tokens: dataset.vocab.tokens().to_vec(),
        doc_freq: dataset.vocab.doc_freq().clone(),
    };
    super::write_atomic(
        &dir.join(VOCAB_FILE),
        serde_json::to_string_pretty(&vocab_file)?.as_bytes(),
    )?;

    let labels: Vec<LabelEntry> = dataset
        .labels
        .codes()
        .iter()
        .enumerate()
        .map(|(i, code)| LabelEntry {
            code: code.clone(),
            kind: kind_str(dataset.labels.kind(code)),
            description_text: dataset.description_text[i].clone(),
            description_tokens: dataset.description_tokens[i].clone(),
            description_ids: dataset.labels.description(code).map(|d| d.to_vec()),
        })
        .collect();
    super::write_atomic(
        &dir.join(LABELS_FILE),
        serde_json::to_string_pretty(&labels)?.as_bytes(),
    )?;

    for (name, docs) in [
        ("train", &dataset.train),
        ("valid", &dataset.valid),
        ("test", &dataset.test),
    ] {
        let mut out = String::new();
        for d in docs {
            let line = DocLine {
                doc_id: d.encoded.doc_id.clone(),
                tokens: d.tokens.clone(),
                token_ids: d.encoded.token_ids.clone(),
                labels: d.encoded.positive_labels().collect(),
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        super::write_atomic(&dir.join(format!("{name}.jsonl")), out.as_bytes())?;
    }

    super::write_atomic(
        &dir.join(STATS_FILE),
        serde_json::to_string_pretty(&dataset.compute_stats())?.as_bytes(),
    )?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let read = |name: &str| -> Result<String> {
        std::fs::read_to_string(dir.join(name))
            .map_err(|e| CliError::data(format!("cannot read {}/{name}: {e}", dir.display())))
    };
    let vocab_file: VocabFile = serde_json::from_str(&read(VOCAB_FILE)?)
        .map_err(|e| CliError::data(format!("{VOCAB_FILE}: {e}")))?;
    let vocab = Vocabulary::from_parts(
        vocab_file.tokens,
        vocab_file.doc_freq,
        vocab_file.min_doc_freq,
    );

    let entries: Vec<LabelEntry> = serde_json::from_str(&read(LABELS_FILE)?)
        .map_err(|e| CliError::data(format!("{LABELS_FILE}: {e}")))?;
    let mut labels = LabelSpace::from_codes(entries.iter().map(|e| e.code.clone()).collect());
    let mut description_text = Vec::with_capacity(entries.len());
    let mut description_tokens = Vec::with_capacity(entries.len());
    for entry in &entries {
        if let Some(k) = entry.kind.as_deref().and_then(kind_from_str) {
            labels.set_kind(&entry.code, k);
        }
        if let Some(ids) = &entry.description_ids {
            labels.set_description(&entry.code, ids.clone());
        }
        description_text.push(entry.description_text.clone());
        description_tokens.push(entry.description_tokens.clone());
    }

    let n_labels = labels.len();
    let load_split = |name: &str| -> Result<Vec<StoredDoc>> {
        let text = read(&format!("{name}.jsonl"))?;
        let mut docs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: DocLine = serde_json::from_str(line)
                .map_err(|e| CliError::data(format!("{name}.jsonl:{}: {e}", i + 1)))?;
            let mut label_vector = vec![false; n_labels];
            for l in parsed.labels {
                if l >= n_labels {
                    return Err(CliError::data(format!(
                        "{name}.jsonl:{}: label index {l} out of range",
                        i + 1
                    )));
                }
                label_vector[l] = true;
            }
            docs.push(StoredDoc {
                encoded: EncodedDocument {
                    doc_id: parsed.doc_id,
                    token_ids: parsed.token_ids,
                    label_vector,
                },
                tokens: parsed.tokens,
            });
        }
        Ok(docs)
    };

    Ok(Dataset {
        vocab,
        labels,
        description_text,
        description_tokens,
        train: load_split("train")?,
        valid: load_split("valid")?,
        test: load_split("test")?,
    })
}
