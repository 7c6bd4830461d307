//! Micro/macro precision, recall, F1, rank-based ROC-AUC, and
//! precision@n over a document-by-label score matrix, with optional
//! diagnosis/procedure breakdowns.
//!
//! Every metric reduces exact integer counts with a single final division
//! (AUC numerators are exact half-integers), so results are reproducible
//! to the bit and directly comparable against brute-force oracles.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::LabelKind;
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetricsError {
    ShapeMismatch,
    NonFiniteScore,
    /// precision@n needs 1 <= n <= |L|
    InvalidN {
        n: usize,
        n_labels: usize,
    },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::ShapeMismatch => write!(f, "scores and truth shapes differ"),
            MetricsError::NonFiniteScore => write!(f, "scores must be finite"),
            MetricsError::InvalidN { n, n_labels } => {
                write!(
                    f,
                    "precision@{n} undefined for a space of {n_labels} labels"
                )
            }
        }
    }
}

impl core::error::Error for MetricsError {}

/// Scores and ground truth for D documents over |L| labels, plus the
/// decision threshold (default 0.5; a label is predicted when its score
/// strictly exceeds it).
#[derive(Clone, Debug)]
pub struct PredictionMatrix {
    scores: Matrix,
    truth: Vec<bool>,
    threshold: f64,
}

impl PredictionMatrix {
    pub fn new(scores: Matrix, truth: Vec<bool>) -> Result<Self, MetricsError> {
        if scores.rows() * scores.cols() != truth.len() {
            return Err(MetricsError::ShapeMismatch);
        }
        if !scores.is_finite() {
            return Err(MetricsError::NonFiniteScore);
        }
        Ok(PredictionMatrix {
            scores,
            truth,
            threshold: 0.5,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn n_documents(&self) -> usize {
        self.scores.rows()
    }

    pub fn n_labels(&self) -> usize {
        self.scores.cols()
    }

    pub fn score(&self, doc: usize, label: usize) -> f64 {
        self.scores[(doc, label)]
    }

    pub fn truth(&self, doc: usize, label: usize) -> bool {
        self.truth[doc * self.n_labels() + label]
    }

    pub fn predicted(&self, doc: usize, label: usize) -> bool {
        self.score(doc, label) > self.threshold
    }
}

/// Thresholded confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Counts {
    fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => {}
        }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

/// Zero-denominator convention: the metric is 0.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(c: &Counts) -> Prf {
        let precision = c.precision();
        let recall = c.recall();
        Prf {
            precision,
            recall,
            f1: f1_of(precision, recall),
        }
    }
}

/// Label-averaged metrics. `f1` is the harmonic mean of the label-averaged
/// precision and recall; `mean_label_f1` averages per-label F1 instead and
/// is reported alongside for transparency.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MacroPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mean_label_f1: f64,
}

pub fn label_counts(pm: &PredictionMatrix, label: usize) -> Counts {
    let mut c = Counts::default();
    for doc in 0..pm.n_documents() {
        c.add(pm.predicted(doc, label), pm.truth(doc, label));
    }
    c
}

/// Pools confusion counts over all (document, label) pairs.
pub fn micro_prf(pm: &PredictionMatrix) -> Prf {
    let mut c = Counts::default();
    for doc in 0..pm.n_documents() {
        for label in 0..pm.n_labels() {
            c.add(pm.predicted(doc, label), pm.truth(doc, label));
        }
    }
    Prf::from_counts(&c)
}

/// Unweighted mean of per-label precision and recall over all |L| labels;
/// labels with zero denominators contribute 0.
pub fn macro_prf(pm: &PredictionMatrix) -> MacroPrf {
    let n_labels = pm.n_labels();
    if n_labels == 0 {
        return MacroPrf::default();
    }
    let mut p_sum = 0.0;
    let mut r_sum = 0.0;
    let mut f1_sum = 0.0;
    for label in 0..n_labels {
        let prf = Prf::from_counts(&label_counts(pm, label));
        p_sum += prf.precision;
        r_sum += prf.recall;
        f1_sum += prf.f1;
    }
    let precision = p_sum / n_labels as f64;
    let recall = r_sum / n_labels as f64;
    MacroPrf {
        precision,
        recall,
        f1: f1_of(precision, recall),
        mean_label_f1: f1_sum / n_labels as f64,
    }
}

/// Micro-F1 restricted to the labels of one kind; `None` when no label has
/// that kind.
pub fn kind_micro_prf(
    pm: &PredictionMatrix,
    kinds: &[Option<LabelKind>],
    kind: LabelKind,
) -> Option<Prf> {
    let mut c = Counts::default();
    let mut any = false;
    for (label, k) in kinds.iter().enumerate() {
        if *k != Some(kind) {
            continue;
        }
        any = true;
        for doc in 0..pm.n_documents() {
            c.add(pm.predicted(doc, label), pm.truth(doc, label));
        }
    }
    any.then(|| Prf::from_counts(&c))
}

/// Mann-Whitney AUC over one binary problem; ties contribute 1/2 via
/// midranks. `None` when positives or negatives are absent.
///
/// The rank sum is an exact half-integer, and the identity
/// `ranksum_pos - n_pos(n_pos+1)/2 = #(pos > neg) + #(ties)/2`
/// makes this bit-identical to explicit pair enumeration.
fn binary_auc(cells: &mut [(f64, bool)]) -> Option<f64> {
    let n_pos = cells.iter().filter(|(_, t)| *t).count() as u64;
    let n_neg = cells.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranksum_pos = 0.0f64;
    let mut i = 0;
    while i < cells.len() {
        let mut j = i;
        while j < cells.len() && cells[j].0 == cells[i].0 {
            j += 1;
        }
        // positions i..j share ranks i+1 ..= j; midrank is their mean
        let midrank = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = cells[i..j].iter().filter(|(_, t)| *t).count() as f64;
        ranksum_pos += midrank * pos_in_group;
        i = j;
    }
    let numerator = ranksum_pos - (n_pos * (n_pos + 1) / 2) as f64;
    Some(numerator / (n_pos * n_neg) as f64)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AucSummary {
    /// all (document, label) cells pooled into one binary problem
    pub micro: Option<f64>,
    /// mean of per-label AUC over labels with at least one positive and
    /// one negative; absent if no label qualifies
    pub macro_: Option<f64>,
    pub per_label: Vec<Option<f64>>,
}

pub fn auc(pm: &PredictionMatrix) -> AucSummary {
    let mut pooled: Vec<(f64, bool)> = Vec::with_capacity(pm.n_documents() * pm.n_labels());
    for doc in 0..pm.n_documents() {
        for label in 0..pm.n_labels() {
            pooled.push((pm.score(doc, label), pm.truth(doc, label)));
        }
    }
    let micro = binary_auc(&mut pooled);

    let mut per_label = Vec::with_capacity(pm.n_labels());
    let mut sum = 0.0;
    let mut included = 0u64;
    for label in 0..pm.n_labels() {
        let mut cells: Vec<(f64, bool)> = (0..pm.n_documents())
            .map(|d| (pm.score(d, label), pm.truth(d, label)))
            .collect();
        let auc = binary_auc(&mut cells);
        if let Some(a) = auc {
            sum += a;
            included += 1;
        }
        per_label.push(auc);
    }
    let macro_ = (included > 0).then(|| sum / included as f64);
    AucSummary {
        micro,
        macro_,
        per_label,
    }
}

/// Mean over documents of (hits among the n highest-scored labels) / n,
/// with score ties broken by ascending label index. Reads as "of the n
/// most confident predictions, n times this fraction are correct on
/// average", which is the decision-support view of ranking quality.
pub fn precision_at_n(pm: &PredictionMatrix, n: usize) -> Result<f64, MetricsError> {
    let n_labels = pm.n_labels();
    if n == 0 || n > n_labels {
        return Err(MetricsError::InvalidN { n, n_labels });
    }
    if pm.n_documents() == 0 {
        return Ok(0.0);
    }
    let mut total_hits: u64 = 0;
    let mut order: Vec<usize> = Vec::with_capacity(n_labels);
    for doc in 0..pm.n_documents() {
        order.clear();
        order.extend(0..n_labels);
        order.sort_by(|&a, &b| {
            pm.score(doc, b)
                .total_cmp(&pm.score(doc, a))
                .then(a.cmp(&b))
        });
        total_hits += order[..n].iter().filter(|&&l| pm.truth(doc, l)).count() as u64;
    }
    Ok(total_hits as f64 / (n as u64 * pm.n_documents() as u64) as f64)
}

/// One row of the per-label table.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelReport {
    pub code: String,
    pub support: u64,
    pub counts: Counts,
    pub prf: Prf,
    pub auc: Option<f64>,
}

/// The full evaluation: micro/macro P/R/F1, AUCs, precision@n for the
/// requested cutoffs (those that fit the label space), per-kind micro
/// breakdowns when kinds are known, and a per-label table.
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub n_documents: usize,
    pub n_labels: usize,
    pub threshold: f64,
    pub micro: Prf,
    pub macro_: MacroPrf,
    pub auc_micro: Option<f64>,
    pub auc_macro: Option<f64>,
    pub precision_at: Vec<(usize, f64)>,
    pub diagnosis_micro: Option<Prf>,
    pub procedure_micro: Option<Prf>,
    pub per_label: Vec<LabelReport>,
}

pub fn evaluate(
    pm: &PredictionMatrix,
    codes: &[String],
    kinds: &[Option<LabelKind>],
    p_at_cutoffs: &[usize],
) -> EvalReport {
    debug_assert_eq!(codes.len(), pm.n_labels());
    debug_assert_eq!(kinds.len(), pm.n_labels());
    let auc_summary = auc(pm);
    let per_label = (0..pm.n_labels())
        .map(|label| {
            let counts = label_counts(pm, label);
            LabelReport {
                code: codes[label].clone(),
                support: (0..pm.n_documents())
                    .filter(|&d| pm.truth(d, label))
                    .count() as u64,
                counts,
                prf: Prf::from_counts(&counts),
                auc: auc_summary.per_label[label],
            }
        })
        .collect();
    let precision_at = p_at_cutoffs
        .iter()
        .filter(|&&n| n >= 1 && n <= pm.n_labels())
        .map(|&n| {
            (
                n,
                precision_at_n(pm, n).expect("cutoff filtered to valid range"),
            )
        })
        .collect();
    EvalReport {
        n_documents: pm.n_documents(),
        n_labels: pm.n_labels(),
        threshold: pm.threshold,
        micro: micro_prf(pm),
        macro_: macro_prf(pm),
        auc_micro: auc_summary.micro,
        auc_macro: auc_summary.macro_,
        precision_at,
        diagnosis_micro: kind_micro_prf(pm, kinds, LabelKind::Diagnosis),
        procedure_micro: kind_micro_prf(pm, kinds, LabelKind::Procedure),
        per_label,
    }
}
