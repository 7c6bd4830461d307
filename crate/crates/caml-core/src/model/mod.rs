//! Forward and backward passes of the per-label attention model, the
//! max-pool CNN baseline, and the description embedder used for
//! description regularization.
//!
//! Layout conventions: a document of N tokens embeds to an N x d_e matrix
//! (one row per position). The convolution produces the hidden matrix as
//! N x d_c, i.e. row `n` holds the feature vector of position `n` (the
//! transpose of the usual d_c x N presentation). Per-label parameter
//! matrices store one label per row.

mod backward;

pub use backward::backward;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::EmbeddingTable;
use crate::numerics::{dot, sigmoid, softmax, Matrix, Rng};

/// Which pooling the model uses to turn the hidden matrix into label
/// scores. MaxPool ignores the attention parameters entirely.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Caml,
    MaxPoolCnn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub conv_dim: usize,
    pub kernel: usize,
    pub n_labels: usize,
}

/// Convolution parameters of the description embedder. Output dimension
/// matches the main model's d_c so the distance to an output-weight row
/// is well-formed.
#[derive(Clone, Debug, PartialEq)]
pub struct DescEmbedderParams {
    /// (kernel * d_e) x d_c
    pub conv_weight: Matrix,
    pub conv_bias: Vec<f64>,
}

/// All trainable tensors.
///
/// The embedding table is trainable; the PAD row is pinned to zero (its
/// gradient is discarded). The description embedder shares this embedding
/// table and keeps its own convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct CamlParams {
    pub dims: ModelDims,
    /// |V| x d_e
    pub embeddings: Matrix,
    /// (kernel * d_e) x d_c; row `t * d_e + e` is filter tap `t`, input dim `e`
    pub conv_weight: Matrix,
    pub conv_bias: Vec<f64>,
    /// |L| x d_c; row l is the attention vector for label l
    pub attention: Matrix,
    /// |L| x d_c; row l is the prediction weight vector for label l
    pub out_weight: Matrix,
    pub out_bias: Vec<f64>,
    pub desc_embedder: Option<DescEmbedderParams>,
}

impl CamlParams {
    /// Fresh parameters. Weights use Xavier-uniform bounds, biases start at
    /// zero, and embeddings come from `pretrained` when given, otherwise
    /// Uniform(-0.5/d_e, 0.5/d_e) with a zero PAD row. Each tensor draws
    /// from its own forked stream so the draw sequence of one tensor never
    /// shifts another's.
    pub fn init(
        dims: ModelDims,
        pretrained: Option<&EmbeddingTable>,
        with_desc_embedder: bool,
        rng: &Rng,
    ) -> CamlParams {
        let embeddings = match pretrained {
            Some(table) => {
                assert_eq!(
                    table.matrix.rows(),
                    dims.vocab_size,
                    "embedding rows != |V|"
                );
                assert_eq!(
                    table.matrix.cols(),
                    dims.embed_dim,
                    "embedding dim mismatch"
                );
                table.matrix.clone()
            }
            None => {
                let mut r = rng.fork("embeddings");
                EmbeddingTable::random(dims.vocab_size, dims.embed_dim, &mut r).matrix
            }
        };
        let conv_weight = xavier(
            dims.kernel * dims.embed_dim,
            dims.conv_dim,
            &mut rng.fork("conv"),
        );
        let attention = xavier_rows(dims.n_labels, dims.conv_dim, &mut rng.fork("attention"));
        let out_weight = xavier_rows(dims.n_labels, dims.conv_dim, &mut rng.fork("output"));
        let desc_embedder = with_desc_embedder.then(|| DescEmbedderParams {
            conv_weight: xavier(
                dims.kernel * dims.embed_dim,
                dims.conv_dim,
                &mut rng.fork("desc"),
            ),
            conv_bias: vec![0.0; dims.conv_dim],
        });
        CamlParams {
            dims,
            embeddings,
            conv_weight,
            conv_bias: vec![0.0; dims.conv_dim],
            attention,
            out_weight,
            out_bias: vec![0.0; dims.n_labels],
            desc_embedder,
        }
    }

    /// A same-shaped parameter set with every entry zero; the gradient and
    /// optimizer-moment container.
    pub fn zeros_like(&self) -> CamlParams {
        CamlParams {
            dims: self.dims,
            embeddings: Matrix::zeros(self.embeddings.rows(), self.embeddings.cols()),
            conv_weight: Matrix::zeros(self.conv_weight.rows(), self.conv_weight.cols()),
            conv_bias: vec![0.0; self.conv_bias.len()],
            attention: Matrix::zeros(self.attention.rows(), self.attention.cols()),
            out_weight: Matrix::zeros(self.out_weight.rows(), self.out_weight.cols()),
            out_bias: vec![0.0; self.out_bias.len()],
            desc_embedder: self.desc_embedder.as_ref().map(|d| DescEmbedderParams {
                conv_weight: Matrix::zeros(d.conv_weight.rows(), d.conv_weight.cols()),
                conv_bias: vec![0.0; d.conv_bias.len()],
            }),
        }
    }

    /// Named views of every tensor, in a fixed order shared with
    /// `tensors_mut`. Bias tensors are the ones whose name ends in "bias".
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let mut out: Vec<(&'static str, &[f64])> = vec![
            ("embeddings", self.embeddings.data()),
            ("conv_weight", self.conv_weight.data()),
            ("conv_bias", &self.conv_bias),
            ("attention", self.attention.data()),
            ("out_weight", self.out_weight.data()),
            ("out_bias", &self.out_bias),
        ];
        if let Some(d) = &self.desc_embedder {
            out.push(("desc_conv_weight", d.conv_weight.data()));
            out.push(("desc_conv_bias", &d.conv_bias));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out: Vec<(&'static str, &mut [f64])> = vec![
            ("embeddings", self.embeddings.data_mut()),
            ("conv_weight", self.conv_weight.data_mut()),
            ("conv_bias", &mut self.conv_bias),
            ("attention", self.attention.data_mut()),
            ("out_weight", self.out_weight.data_mut()),
            ("out_bias", &mut self.out_bias),
        ];
        if let Some(d) = &mut self.desc_embedder {
            out.push(("desc_conv_weight", d.conv_weight.data_mut()));
            out.push(("desc_conv_bias", &mut d.conv_bias));
        }
        out
    }

    /// Scales every tensor in place (batch averaging).
    pub fn scale(&mut self, s: f64) {
        for (_, t) in self.tensors_mut() {
            for x in t {
                *x *= s;
            }
        }
    }

    /// `self += scale * other` over every tensor.
    pub fn add_scaled(&mut self, other: &CamlParams, scale: f64) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += scale * y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }
}

fn xavier(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let limit = libm::sqrt(6.0 / (rows + cols) as f64);
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-limit, limit))
}

// per-label vectors: fan-in d_c, fan-out 1
fn xavier_rows(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let limit = libm::sqrt(6.0 / (cols + 1) as f64);
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-limit, limit))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelError {
    /// The description embedder is required (lambda > 0) but absent.
    NoDescEmbedder,
    /// A positive label has no description while regularization is on.
    MissingDescription { label_index: usize },
    /// Descriptions must be non-empty token sequences.
    EmptyDescription { label_index: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NoDescEmbedder => {
                write!(
                    f,
                    "description regularization requires description-embedder parameters"
                )
            }
            ModelError::MissingDescription { label_index } => {
                write!(
                    f,
                    "label {label_index} has no description but regularization is enabled"
                )
            }
            ModelError::EmptyDescription { label_index } => {
                write!(f, "label {label_index} has an empty description")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// Per-position multiplier applied to embedding rows: 0 for dropped
/// positions, 1/(1-q) for kept ones (inverted dropout, train time only).
pub fn dropout_mask(len: usize, q: f64, rng: &mut Rng) -> Vec<f64> {
    debug_assert!((0.0..1.0).contains(&q));
    let keep_scale = 1.0 / (1.0 - q);
    (0..len)
        .map(|_| if rng.next_f64() < q { 0.0 } else { keep_scale })
        .collect()
}

/// Embeds the token sequence (applying the dropout mask if given) and runs
/// the zero-padded convolution with tanh. Returns `(embedded, hidden)`,
/// both with one row per position; `hidden` has exactly N rows because the
/// input is padded by floor((k-1)/2) zeros left and ceil((k-1)/2) right.
pub fn conv_forward(
    token_ids: &[usize],
    params: &CamlParams,
    dropout: Option<&[f64]>,
) -> (Matrix, Matrix) {
    let embedded = embed(token_ids, &params.embeddings, dropout);
    let hidden = convolve(
        &embedded,
        &params.conv_weight,
        &params.conv_bias,
        params.dims.kernel,
    );
    (embedded, hidden)
}

fn embed(token_ids: &[usize], embeddings: &Matrix, dropout: Option<&[f64]>) -> Matrix {
    let d_e = embeddings.cols();
    let mut out = Matrix::zeros(token_ids.len(), d_e);
    for (pos, &tid) in token_ids.iter().enumerate() {
        let scale = dropout.map_or(1.0, |m| m[pos]);
        if scale == 0.0 {
            continue;
        }
        let src = embeddings.row(tid);
        let dst = out.row_mut(pos);
        for e in 0..d_e {
            dst[e] = scale * src[e];
        }
    }
    out
}

pub(crate) fn convolve(embedded: &Matrix, weight: &Matrix, bias: &[f64], kernel: usize) -> Matrix {
    let n = embedded.rows();
    let d_e = embedded.cols();
    let d_c = bias.len();
    debug_assert_eq!(weight.rows(), kernel * d_e);
    debug_assert_eq!(weight.cols(), d_c);
    let left = (kernel - 1) / 2;
    let mut hidden = Matrix::zeros(n, d_c);
    for pos in 0..n {
        let row = hidden.row_mut(pos);
        row.copy_from_slice(bias);
        for tap in 0..kernel {
            let p = pos as isize - left as isize + tap as isize;
            if p < 0 || p >= n as isize {
                continue; // zero padding
            }
            let x = embedded.row(p as usize);
            for e in 0..d_e {
                let xv = x[e];
                if xv == 0.0 {
                    continue;
                }
                let w = weight.row(tap * d_e + e);
                for j in 0..d_c {
                    row[j] += xv * w[j];
                }
            }
        }
        for v in row.iter_mut() {
            *v = libm::tanh(*v);
        }
    }
    hidden
}

/// Per-label attention: alpha row l is SoftMax over positions of the
/// hidden-state projections onto u_l, and label vector l is the
/// alpha-weighted sum of hidden rows.
pub fn attention_forward(hidden: &Matrix, attention: &Matrix) -> (Matrix, Matrix) {
    let n = hidden.rows();
    let d_c = hidden.cols();
    let n_labels = attention.rows();
    debug_assert_eq!(attention.cols(), d_c);
    let mut alpha = Matrix::zeros(n_labels, n);
    let mut label_vectors = Matrix::zeros(n_labels, d_c);
    for label in 0..n_labels {
        let u = attention.row(label);
        let logits: Vec<f64> = (0..n).map(|pos| dot(hidden.row(pos), u)).collect();
        let weights = softmax(&logits);
        let v = label_vectors.row_mut(label);
        for pos in 0..n {
            let h = hidden.row(pos);
            let w = weights[pos];
            for j in 0..d_c {
                v[j] += w * h[j];
            }
        }
        alpha.row_mut(label).copy_from_slice(&weights);
    }
    (alpha, label_vectors)
}

/// Per-dimension max over positions, with the argmax vector cached for
/// the explanation module. Ties resolve to the smallest position.
pub fn maxpool_forward(hidden: &Matrix) -> (Vec<f64>, Vec<usize>) {
    let n = hidden.rows();
    assert!(n >= 1, "max-pool over empty document");
    let d_c = hidden.cols();
    let mut pooled = hidden.row(0).to_vec();
    let mut argmax = vec![0usize; d_c];
    for pos in 1..n {
        let h = hidden.row(pos);
        for j in 0..d_c {
            if h[j] > pooled[j] {
                pooled[j] = h[j];
                argmax[j] = pos;
            }
        }
    }
    (pooled, argmax)
}

/// sigma(beta_l . v_l + b_l) for one label.
pub fn classify_one(v: &[f64], beta: &[f64], bias: f64) -> (f64, f64) {
    let logit = dot(beta, v) + bias;
    (logit, sigmoid(logit))
}

/// Pooling-specific cached state of a forward pass.
#[derive(Clone, Debug)]
pub enum PoolingTrace {
    Attention {
        /// |L| x N; each row sums to 1
        alpha: Matrix,
        /// |L| x d_c; row l is v_l
        label_vectors: Matrix,
    },
    MaxPool {
        pooled: Vec<f64>,
        /// argmax position per hidden dimension (ties -> smallest)
        argmax: Vec<usize>,
    },
}

/// Everything the backward pass and the explainers need from a forward run.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub kind: ModelKind,
    pub token_ids: Vec<usize>,
    /// N x d_e, after dropout
    pub embedded: Matrix,
    pub dropout: Option<Vec<f64>>,
    /// N x d_c
    pub hidden: Matrix,
    pub pooling: PoolingTrace,
    pub logits: Vec<f64>,
    pub yhat: Vec<f64>,
}

impl ForwardTrace {
    pub fn doc_len(&self) -> usize {
        self.token_ids.len()
    }

    /// Attention row for a label; panics for max-pool traces.
    pub fn alpha_row(&self, label: usize) -> &[f64] {
        match &self.pooling {
            PoolingTrace::Attention { alpha, .. } => alpha.row(label),
            PoolingTrace::MaxPool { .. } => panic!("max-pool trace has no attention"),
        }
    }
}

/// Full forward pass for one document. `dropout` is train-time only.
pub fn forward(
    token_ids: &[usize],
    params: &CamlParams,
    kind: ModelKind,
    dropout: Option<Vec<f64>>,
) -> ForwardTrace {
    assert!(!token_ids.is_empty(), "forward over empty document");
    let (embedded, hidden) = conv_forward(token_ids, params, dropout.as_deref());
    let n_labels = params.dims.n_labels;
    let mut logits = Vec::with_capacity(n_labels);
    let mut yhat = Vec::with_capacity(n_labels);
    let pooling = match kind {
        ModelKind::Caml => {
            let (alpha, label_vectors) = attention_forward(&hidden, &params.attention);
            for label in 0..n_labels {
                let (logit, prob) = classify_one(
                    label_vectors.row(label),
                    params.out_weight.row(label),
                    params.out_bias[label],
                );
                logits.push(logit);
                yhat.push(prob);
            }
            PoolingTrace::Attention {
                alpha,
                label_vectors,
            }
        }
        ModelKind::MaxPoolCnn => {
            let (pooled, argmax) = maxpool_forward(&hidden);
            for label in 0..n_labels {
                let (logit, prob) = classify_one(
                    &pooled,
                    params.out_weight.row(label),
                    params.out_bias[label],
                );
                logits.push(logit);
                yhat.push(prob);
            }
            PoolingTrace::MaxPool { pooled, argmax }
        }
    };
    ForwardTrace {
        kind,
        token_ids: token_ids.to_vec(),
        embedded,
        dropout,
        hidden,
        pooling,
        logits,
        yhat,
    }
}

/// Inference-time label probabilities (no dropout, no trace kept).
pub fn predict(token_ids: &[usize], params: &CamlParams, kind: ModelKind) -> Vec<f64> {
    forward(token_ids, params, kind, None).yhat
}

/// Cached state of one description's pass through the embedder.
#[derive(Clone, Debug)]
pub struct DescTrace {
    pub token_ids: Vec<usize>,
    pub embedded: Matrix,
    pub hidden: Matrix,
    pub argmax: Vec<usize>,
    /// max-pooled output z, length d_c
    pub z: Vec<f64>,
}

/// Embeds a label description and max-pools it into a d_c vector: embed ->
/// convolve (tanh) -> per-dimension max over positions. Shares the word
/// embedding table with the main model; no dropout.
pub fn desc_embed(
    desc_token_ids: &[usize],
    desc_params: &DescEmbedderParams,
    embeddings: &Matrix,
    kernel: usize,
    label_index: usize,
) -> Result<DescTrace, ModelError> {
    if desc_token_ids.is_empty() {
        return Err(ModelError::EmptyDescription { label_index });
    }
    let embedded = embed(desc_token_ids, embeddings, None);
    let hidden = convolve(
        &embedded,
        &desc_params.conv_weight,
        &desc_params.conv_bias,
        kernel,
    );
    let (z, argmax) = maxpool_forward(&hidden);
    Ok(DescTrace {
        token_ids: desc_token_ids.to_vec(),
        embedded,
        hidden,
        argmax,
        z,
    })
}
