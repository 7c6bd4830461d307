//! Extracts the most informative k-gram per (document, label) under four
//! methods (attention argmax, max-pool importance, logistic-regression
//! coefficient sums, and idf-weighted cosine similarity against the code
//! description) and assembles blinded review sheets for qualitative
//! comparison.

mod stem;

pub use stem::stem;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::Vocabulary;
use crate::linear::LrParams;
use crate::model::{ForwardTrace, PoolingTrace};
use crate::numerics::{Matrix, Rng};

/// Default explanation gram length; independent of the model's filter width.
pub const DEFAULT_EXPLAIN_K: usize = 4;
/// Context tokens shown on each side of the gram.
pub const CONTEXT_WINDOW: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExplainMethod {
    Attention,
    MaxPoolImportance,
    LrWeights,
    CosineSim,
}

impl ExplainMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ExplainMethod::Attention => "attention",
            ExplainMethod::MaxPoolImportance => "maxpool",
            ExplainMethod::LrWeights => "lr",
            ExplainMethod::CosineSim => "cosine",
        }
    }

    pub fn parse(s: &str) -> Option<ExplainMethod> {
        match s {
            "attention" => Some(ExplainMethod::Attention),
            "maxpool" => Some(ExplainMethod::MaxPoolImportance),
            "lr" => Some(ExplainMethod::LrWeights),
            "cosine" => Some(ExplainMethod::CosineSim),
            _ => None,
        }
    }
}

/// An extracted k-gram with its surrounding context, reconstructed from
/// the document's kept tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct Snippet {
    pub method: ExplainMethod,
    pub label_index: usize,
    /// position of the first gram token in the document
    pub start: usize,
    pub gram: Vec<String>,
    /// position of the first context token
    pub context_start: usize,
    /// the gram plus up to CONTEXT_WINDOW tokens on each side
    pub context: Vec<String>,
    pub score: f64,
}

impl Snippet {
    /// Gram positions as a half-open range.
    pub fn gram_range(&self) -> core::ops::Range<usize> {
        self.start..self.start + self.gram.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExplainError {
    /// Review sheets need at least two methods' snippets to compare.
    TooFewSnippets { got: usize },
}

impl fmt::Display for ExplainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExplainError::TooFewSnippets { got } => {
                write!(f, "review sheet needs at least 2 snippets, got {got}")
            }
        }
    }
}

impl core::error::Error for ExplainError {}

/// Maps a hidden-matrix position to the k-gram it anchors: the position's
/// convolution window is centered on the position itself, so the reported
/// gram is the k tokens centered there, clipped to document bounds (and to
/// the document length when N < k).
fn anchor_gram(position: usize, k: usize, n_tokens: usize) -> (usize, usize) {
    let len = k.min(n_tokens);
    let half = (len - 1) / 2;
    let start = position.saturating_sub(half).min(n_tokens - len);
    (start, len)
}

fn build_snippet(
    method: ExplainMethod,
    label_index: usize,
    tokens: &[String],
    gram_start: usize,
    gram_len: usize,
    score: f64,
) -> Snippet {
    let context_start = gram_start.saturating_sub(CONTEXT_WINDOW);
    let context_end = (gram_start + gram_len + CONTEXT_WINDOW).min(tokens.len());
    Snippet {
        method,
        label_index,
        start: gram_start,
        gram: tokens[gram_start..gram_start + gram_len].to_vec(),
        context_start,
        context: tokens[context_start..context_end].to_vec(),
        score,
    }
}

/// Attention explanation: the argmax position of the label's attention row
/// (ties to the smallest position), anchored to a k-gram.
pub fn explain_attention(
    trace: &ForwardTrace,
    label_index: usize,
    k: usize,
    tokens: &[String],
) -> Snippet {
    debug_assert_eq!(tokens.len(), trace.doc_len());
    let alpha = trace.alpha_row(label_index);
    let mut best = 0;
    for (pos, &a) in alpha.iter().enumerate() {
        if a > alpha[best] {
            best = pos;
        }
    }
    let (start, len) = anchor_gram(best, k, tokens.len());
    build_snippet(
        ExplainMethod::Attention,
        label_index,
        tokens,
        start,
        len,
        alpha[best],
    )
}

/// Max-pool importance: position i scores the sum of final-layer weights
/// over the filter dimensions whose pooling argmax is i; positions never
/// selected by pooling are excluded. Ties to the smallest position.
pub fn explain_maxpool(
    trace: &ForwardTrace,
    label_index: usize,
    out_weight: &Matrix,
    k: usize,
    tokens: &[String],
) -> Snippet {
    debug_assert_eq!(tokens.len(), trace.doc_len());
    let argmax = match &trace.pooling {
        PoolingTrace::MaxPool { argmax, .. } => argmax,
        PoolingTrace::Attention { .. } => panic!("max-pool importance needs a max-pool trace"),
    };
    let beta = out_weight.row(label_index);
    let mut importance: BTreeMap<usize, f64> = BTreeMap::new();
    for (dim, &pos) in argmax.iter().enumerate() {
        *importance.entry(pos).or_insert(0.0) += beta[dim];
    }
    let (mut best_pos, mut best_score) = (usize::MAX, f64::NEG_INFINITY);
    for (&pos, &score) in &importance {
        if score > best_score {
            best_pos = pos;
            best_score = score;
        }
    }
    let (start, len) = anchor_gram(best_pos, k, tokens.len());
    build_snippet(
        ExplainMethod::MaxPoolImportance,
        label_index,
        tokens,
        start,
        len,
        best_score,
    )
}

/// Logistic-regression explanation: the width-k window maximizing the sum
/// of the label's per-token coefficients (out-of-vocabulary tokens use the
/// UNK coefficient). Ties to the first window.
pub fn explain_lr(
    tokens: &[String],
    label_index: usize,
    params: &LrParams,
    vocab: &Vocabulary,
    k: usize,
) -> Snippet {
    assert!(!tokens.is_empty());
    let scores: Vec<f64> = tokens
        .iter()
        .map(|t| params.weight(label_index, vocab.index_of(t)))
        .collect();
    let len = k.min(tokens.len());
    let mut best_start = 0;
    let mut best_score = f64::NEG_INFINITY;
    for start in 0..=tokens.len() - len {
        let score: f64 = scores[start..start + len].iter().sum();
        if score > best_score {
            best_score = score;
            best_start = start;
        }
    }
    build_snippet(
        ExplainMethod::LrWeights,
        label_index,
        tokens,
        best_start,
        len,
        best_score,
    )
}

/// Document frequencies of stemmed terms over the corpus of all notes plus
/// all code descriptions, with idf(t) = ln((1+D)/(1+df(t))) + 1.
#[derive(Clone, Debug, Default)]
pub struct IdfTable {
    df: BTreeMap<String, u64>,
    n_docs: u64,
}

impl IdfTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts one document (a note or a description); terms are stemmed
    /// and deduplicated before counting.
    pub fn add_document(&mut self, tokens: &[String]) {
        self.n_docs += 1;
        let stems: alloc::collections::BTreeSet<String> = tokens.iter().map(|t| stem(t)).collect();
        for s in stems {
            *self.df.entry(s).or_insert(0) += 1;
        }
    }

    pub fn n_documents(&self) -> u64 {
        self.n_docs
    }

    /// idf of an already-stemmed term.
    pub fn idf(&self, stemmed: &str) -> f64 {
        let df = self.df.get(stemmed).copied().unwrap_or(0);
        libm::log((1 + self.n_docs) as f64 / (1 + df) as f64) + 1.0
    }
}

fn weighted(stems: &[String], idf: &IdfTable) -> (BTreeMap<String, f64>, f64) {
    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    for s in stems {
        *weights.entry(s.clone()).or_insert(0.0) += 1.0;
    }
    let mut norm_sq = 0.0;
    for (term, w) in weights.iter_mut() {
        *w *= idf.idf(term);
        norm_sq += *w * *w;
    }
    (weights, libm::sqrt(norm_sq))
}

/// Cosine-similarity explanation: both the stemmed k-gram and the stemmed
/// description become idf-weighted term vectors; the best-scoring window
/// wins, first occurrence on ties. Returns `None` when no window has
/// positive similarity (zero lexical overlap everywhere).
pub fn explain_cosine(
    tokens: &[String],
    label_index: usize,
    description_tokens: &[String],
    idf: &IdfTable,
    k: usize,
) -> Option<Snippet> {
    if tokens.is_empty() || description_tokens.is_empty() {
        return None;
    }
    let desc_stems: Vec<String> = description_tokens.iter().map(|t| stem(t)).collect();
    let (desc_vec, desc_norm) = weighted(&desc_stems, idf);
    if desc_norm == 0.0 {
        return None;
    }
    let doc_stems: Vec<String> = tokens.iter().map(|t| stem(t)).collect();
    let len = k.min(tokens.len());
    let mut best: Option<(usize, f64)> = None;
    for start in 0..=tokens.len() - len {
        let (gram_vec, gram_norm) = weighted(&doc_stems[start..start + len], idf);
        if gram_norm == 0.0 {
            continue;
        }
        let mut dot = 0.0;
        for (term, w) in &gram_vec {
            if let Some(dw) = desc_vec.get(term) {
                dot += w * dw;
            }
        }
        let cos = dot / (gram_norm * desc_norm);
        if cos > 0.0 && best.is_none_or(|(_, b)| cos > b) {
            best = Some((start, cos));
        }
    }
    best.map(|(start, score)| {
        build_snippet(
            ExplainMethod::CosineSim,
            label_index,
            tokens,
            start,
            len,
            score,
        )
    })
}

/// One anonymized row of a review sheet.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetEntry {
    /// 1-based position on the sheet after shuffling
    pub entry_id: usize,
    pub gram: Vec<String>,
    pub context: Vec<String>,
    /// offset of the gram within the context
    pub gram_offset: usize,
}

/// A blinded comparison sheet: the snippets of several methods for one
/// (document, label) pair, shuffled, with method identities held in a
/// separate key.
#[derive(Clone, Debug, PartialEq)]
pub struct ReviewSheet {
    pub doc_id: String,
    pub code: String,
    pub code_description: Option<String>,
    pub entries: Vec<SheetEntry>,
}

/// entry_id -> method, written to a separate file from the sheet.
#[derive(Clone, Debug, PartialEq)]
pub struct BlindKey {
    pub assignments: Vec<(usize, ExplainMethod)>,
}

/// Shuffles the snippets with the seed and splits them into an anonymized
/// sheet and the method key. Requires at least two snippets.
pub fn build_review_sheet(
    doc_id: &str,
    code: &str,
    code_description: Option<&str>,
    snippets: &[Snippet],
    seed: u64,
) -> Result<(ReviewSheet, BlindKey), ExplainError> {
    if snippets.len() < 2 {
        return Err(ExplainError::TooFewSnippets {
            got: snippets.len(),
        });
    }
    let mut order: Vec<usize> = (0..snippets.len()).collect();
    Rng::new(seed).fork("review-sheet").shuffle(&mut order);
    let mut entries = Vec::with_capacity(snippets.len());
    let mut assignments = Vec::with_capacity(snippets.len());
    for (slot, &idx) in order.iter().enumerate() {
        let s = &snippets[idx];
        entries.push(SheetEntry {
            entry_id: slot + 1,
            gram: s.gram.clone(),
            context: s.context.clone(),
            gram_offset: s.start - s.context_start,
        });
        assignments.push((slot + 1, s.method));
    }
    Ok((
        ReviewSheet {
            doc_id: String::from(doc_id),
            code: String::from(code),
            code_description: code_description.map(String::from),
            entries,
        },
        BlindKey { assignments },
    ))
}

#[cfg(test)]
mod tests;
