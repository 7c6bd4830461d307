//! Shared test fixtures: the planted-trigger corpus. Each label l is
//! caused by a unique, contiguous 4-gram of trigger tokens; documents are
//! filler tokens with 1..=3 trigger blocks spliced in. Label noise: with
//! probability `noise` a document drops one of its positive labels (the
//! trigger text stays), modeling annotation misses.

#![allow(dead_code)]

use std::collections::BTreeSet;

use caml_core::corpus::RawDocument;
use caml_core::numerics::Rng;

pub struct TriggerCorpusSpec {
    pub n_docs: usize,
    pub n_labels: usize,
    pub n_filler_tokens: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub noise: f64,
    pub seed: u64,
}

impl TriggerCorpusSpec {
    /// The scaled-down end-to-end corpus: 400 documents, ~300-token
    /// vocabulary, 60..=120 tokens per document, 20 labels, 10% noise.
    pub fn standard(seed: u64) -> Self {
        TriggerCorpusSpec {
            n_docs: 400,
            n_labels: 20,
            n_filler_tokens: 220,
            min_len: 60,
            max_len: 120,
            noise: 0.1,
            seed,
        }
    }
}

pub struct TriggerCorpus {
    pub docs: Vec<RawDocument>,
    /// per label, its 4 trigger tokens
    pub triggers: Vec<[String; 4]>,
    /// per document, the label codes whose triggers are present in the
    /// text (the noiseless ground truth)
    pub true_labels: Vec<BTreeSet<String>>,
}

pub fn label_code(label: usize) -> String {
    format!("L{label:02}")
}

pub fn generate(spec: &TriggerCorpusSpec) -> TriggerCorpus {
    let mut rng = Rng::new(spec.seed).fork("trigger-corpus");
    let fillers: Vec<String> = (0..spec.n_filler_tokens)
        .map(|i| format!("w{i:03}"))
        .collect();
    let triggers: Vec<[String; 4]> = (0..spec.n_labels)
        .map(|l| {
            [
                format!("trig{l}a"),
                format!("trig{l}b"),
                format!("trig{l}c"),
                format!("trig{l}d"),
            ]
        })
        .collect();

    let mut docs = Vec::with_capacity(spec.n_docs);
    let mut true_labels = Vec::with_capacity(spec.n_docs);
    for i in 0..spec.n_docs {
        let len = spec.min_len + rng.below(spec.max_len - spec.min_len + 1);
        let mut tokens: Vec<String> = (0..len)
            .map(|_| fillers[rng.below(fillers.len())].clone())
            .collect();
        let n_triggers = 1 + rng.below(3);
        let chosen = rng.sample_indices(spec.n_labels, n_triggers);
        // slots index the filler sequence; inserting back-to-front keeps
        // every trigger block contiguous
        let slots: Vec<usize> = chosen.iter().map(|_| rng.below(len + 1)).collect();
        let mut order: Vec<usize> = (0..chosen.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(slots[i]));
        for &i in &order {
            let at = slots[i];
            for (offset, tok) in triggers[chosen[i]].iter().enumerate() {
                tokens.insert(at + offset, tok.clone());
            }
        }
        for &label in &chosen {
            debug_assert!(trigger_position(&tokens, &triggers[label]).is_some());
        }
        let truth: BTreeSet<String> = chosen.iter().map(|&l| label_code(l)).collect();
        let mut labels = truth.clone();
        if rng.next_f64() < spec.noise {
            let victims: Vec<String> = labels.iter().cloned().collect();
            labels.remove(&victims[rng.below(victims.len())]);
        }
        docs.push(RawDocument {
            doc_id: format!("d{i:04}"),
            group_id: format!("g{i:04}"),
            text: tokens.join(" "),
            labels,
        });
        true_labels.push(truth);
    }
    TriggerCorpus {
        docs,
        triggers,
        true_labels,
    }
}

/// First occurrence of the label's trigger 4-gram in a token sequence.
pub fn trigger_position(tokens: &[String], trigger: &[String; 4]) -> Option<usize> {
    tokens.windows(4).position(|w| {
        w[0] == trigger[0] && w[1] == trigger[1] && w[2] == trigger[2] && w[3] == trigger[3]
    })
}

#[allow(unused)]
pub fn write_corpus_file(dir: &std::path::Path, corpus: &TriggerCorpus) -> std::path::PathBuf {
    let path = dir.join("corpus.jsonl");
    caml_cli::formats::corpus_file::write_corpus(&path, &corpus.docs).unwrap();
    path
}
