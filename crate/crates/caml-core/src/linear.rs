//! One-vs-rest logistic regression over unigram bag-of-words counts: the
//! non-neural baseline and one source of explanation scores.
//!
//! Training is full-batch gradient descent with a fixed step and squared-L2
//! regularization; the baseline only needs to be correct and deterministic,
//! not fast. Labels never observed in training keep zero weights and a
//! strongly negative bias, so they are never predicted on held-out data.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::EncodedDocument;
use crate::metrics::PredictionMatrix;
use crate::numerics::{sigmoid, Matrix};

/// Bias assigned to labels absent from training: sigma(-50) ~ 2e-22.
pub const NEVER_PREDICT_BIAS: f64 = -50.0;

/// Sparse token-count vector over vocabulary indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BowVector {
    counts: BTreeMap<usize, f64>,
}

impl BowVector {
    pub fn from_token_ids(token_ids: &[usize]) -> Self {
        let mut counts = BTreeMap::new();
        for &t in token_ids {
            *counts.entry(t).or_insert(0.0) += 1.0;
        }
        BowVector { counts }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.counts.iter().map(|(&i, &c)| (i, c))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrConfig {
    pub epochs: usize,
    pub step_size: f64,
    /// squared-L2 weight; the penalty is l2 * ||w||^2 per label
    pub l2: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            epochs: 300,
            step_size: 1.0,
            l2: 1e-4,
        }
    }
}

/// Per-label weight rows and biases. `trained[l]` records whether label l
/// had at least one positive training example.
#[derive(Clone, Debug, PartialEq)]
pub struct LrParams {
    /// |L| x |V|
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub trained: Vec<bool>,
}

impl LrParams {
    pub fn n_labels(&self) -> usize {
        self.bias.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.weights.cols()
    }

    /// Weight of one (token, label) coordinate; the explanation score unit.
    pub fn weight(&self, label: usize, token: usize) -> f64 {
        self.weights[(label, token)]
    }
}

pub struct LrTrainResult {
    pub params: LrParams,
    /// mean per-document loss after each epoch
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent on the mean logistic loss of every label
/// with at least one positive example. Deterministic: zero initialization
/// and fixed iteration order, no randomness anywhere.
pub fn lr_train(
    docs: &[EncodedDocument],
    vocab_size: usize,
    n_labels: usize,
    config: &LrConfig,
) -> LrTrainResult {
    let bows: Vec<BowVector> = docs
        .iter()
        .map(|d| BowVector::from_token_ids(&d.token_ids))
        .collect();
    let mut trained = vec![false; n_labels];
    for doc in docs {
        for label in doc.positive_labels() {
            trained[label] = true;
        }
    }

    let mut weights = Matrix::zeros(n_labels, vocab_size);
    let mut bias = vec![0.0; n_labels];
    for (label, &t) in trained.iter().enumerate() {
        if !t {
            bias[label] = NEVER_PREDICT_BIAS;
        }
    }

    let inv_docs = 1.0 / docs.len().max(1) as f64;
    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut grad_w = Matrix::zeros(n_labels, vocab_size);
    let mut grad_b = vec![0.0; n_labels];
    for _ in 0..config.epochs {
        grad_w.fill(0.0);
        grad_b.fill(0.0);
        let mut loss = 0.0;
        for (doc, bow) in docs.iter().zip(&bows) {
            for label in 0..n_labels {
                if !trained[label] {
                    continue;
                }
                let mut z = bias[label];
                for (idx, count) in bow.iter() {
                    z += weights[(label, idx)] * count;
                }
                let p = sigmoid(z);
                let y = if doc.label_vector[label] { 1.0 } else { 0.0 };
                let pc = p.clamp(1e-12, 1.0 - 1e-12);
                loss -= (y * libm::log(pc) + (1.0 - y) * libm::log(1.0 - pc)) * inv_docs;
                let residual = (p - y) * inv_docs;
                grad_b[label] += residual;
                let row = grad_w.row_mut(label);
                for (idx, count) in bow.iter() {
                    row[idx] += residual * count;
                }
            }
        }
        for label in 0..n_labels {
            if !trained[label] {
                continue;
            }
            let w = weights.row_mut(label);
            let g = grad_w.row(label);
            for i in 0..vocab_size {
                loss += config.l2 * w[i] * w[i];
                w[i] -= config.step_size * (g[i] + 2.0 * config.l2 * w[i]);
            }
            bias[label] -= config.step_size * grad_b[label];
        }
        loss_history.push(loss);
    }

    LrTrainResult {
        params: LrParams {
            weights,
            bias,
            trained,
        },
        loss_history,
    }
}

/// sigma(w_l . x + b_l) for every label.
pub fn lr_predict(bow: &BowVector, params: &LrParams) -> Vec<f64> {
    (0..params.n_labels())
        .map(|label| {
            let mut z = params.bias[label];
            for (idx, count) in bow.iter() {
                z += params.weights[(label, idx)] * count;
            }
            sigmoid(z)
        })
        .collect()
}

/// Scores every document; companion of `training::predict_matrix`.
pub fn lr_predict_matrix(params: &LrParams, docs: &[EncodedDocument]) -> PredictionMatrix {
    let n_labels = params.n_labels();
    let mut scores = Matrix::zeros(docs.len(), n_labels);
    let mut truth = Vec::with_capacity(docs.len() * n_labels);
    for (i, doc) in docs.iter().enumerate() {
        let bow = BowVector::from_token_ids(&doc.token_ids);
        scores.row_mut(i).copy_from_slice(&lr_predict(&bow, params));
        truth.extend_from_slice(&doc.label_vector);
    }
    PredictionMatrix::new(scores, truth).expect("finite scores")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn doc(id: usize, token_ids: &[usize], labels: &[bool]) -> EncodedDocument {
        EncodedDocument {
            doc_id: id.to_string(),
            token_ids: token_ids.to_vec(),
            label_vector: labels.to_vec(),
        }
    }

    // vocab: 0=PAD 1=UNK 2..=6 content tokens; label 0 <=> token 2
    fn separable_corpus() -> Vec<EncodedDocument> {
        let mut docs = Vec::new();
        for i in 0..30 {
            let filler = 3 + (i % 4);
            if i % 2 == 0 {
                docs.push(doc(i, &[2, filler, filler], &[true, false]));
            } else {
                docs.push(doc(i, &[filler, 6, filler], &[false, false]));
            }
        }
        docs
    }

    #[test]
    fn separable_corpus_is_fit_perfectly() {
        let docs = separable_corpus();
        let result = lr_train(&docs, 7, 2, &LrConfig::default());
        for d in &docs {
            let scores = lr_predict(&BowVector::from_token_ids(&d.token_ids), &result.params);
            assert_eq!(scores[0] > 0.5, d.label_vector[0]);
        }
        assert!(
            result.params.weight(0, 2) > 0.0,
            "trigger token weight must be positive"
        );
    }

    #[test]
    fn absent_label_is_never_predicted() {
        // label 1 has no positive training examples
        let docs = separable_corpus();
        let result = lr_train(&docs, 7, 2, &LrConfig::default());
        assert!(!result.params.trained[1]);
        for ids in [&[2usize, 3, 4][..], &[6, 6, 6][..], &[][..]] {
            let scores = lr_predict(&BowVector::from_token_ids(ids), &result.params);
            assert!(scores[1] < 0.5);
        }
    }

    #[test]
    fn identical_documents_fit_label_frequency() {
        // four identical docs, one positive: optimum is yhat = 1/4
        let docs: Vec<EncodedDocument> = (0..4).map(|i| doc(i, &[2, 3], &[i == 0])).collect();
        let config = LrConfig {
            epochs: 4000,
            step_size: 0.5,
            l2: 0.0,
        };
        let result = lr_train(&docs, 4, 1, &config);
        let scores = lr_predict(&BowVector::from_token_ids(&[2, 3]), &result.params);
        assert!((scores[0] - 0.25).abs() < 0.01, "got {}", scores[0]);
    }

    #[test]
    fn prediction_ignores_token_order() {
        let docs = separable_corpus();
        let result = lr_train(&docs, 7, 2, &LrConfig::default());
        let a = lr_predict(&BowVector::from_token_ids(&[2, 3, 4]), &result.params);
        let b = lr_predict(&BowVector::from_token_ids(&[4, 2, 3]), &result.params);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_params_score_half_and_empty_doc_scores_bias() {
        let params = LrParams {
            weights: Matrix::zeros(2, 5),
            bias: alloc::vec![0.0, 1.0],
            trained: alloc::vec![true, true],
        };
        let scores = lr_predict(&BowVector::from_token_ids(&[2, 3]), &params);
        assert_eq!(scores[0], 0.5);
        let empty = lr_predict(&BowVector::default(), &params);
        assert_eq!(empty[0], 0.5);
        assert!((empty[1] - sigmoid(1.0)).abs() < 1e-15);
    }

    #[test]
    fn doubling_a_count_moves_score_with_weight_sign() {
        let mut params = LrParams {
            weights: Matrix::zeros(2, 5),
            bias: alloc::vec![0.0, 0.0],
            trained: alloc::vec![true, true],
        };
        params.weights[(0, 2)] = 0.7;
        params.weights[(1, 2)] = -0.7;
        let once = lr_predict(&BowVector::from_token_ids(&[2]), &params);
        let twice = lr_predict(&BowVector::from_token_ids(&[2, 2]), &params);
        assert!(twice[0] > once[0]);
        assert!(twice[1] < once[1]);
    }

    #[test]
    fn training_loss_is_non_increasing_with_small_steps() {
        let docs = separable_corpus();
        let config = LrConfig {
            epochs: 60,
            step_size: 0.05,
            l2: 1e-4,
        };
        let result = lr_train(&docs, 7, 2, &config);
        for pair in result.loss_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "loss increased: {pair:?}");
        }
    }
}
