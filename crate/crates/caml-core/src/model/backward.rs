//! Hand-derived gradients of the per-example loss with respect to every
//! trainable tensor, including the shared embedding table and the
//! description embedder. Verified against central finite differences in
//! `tests/gradients.rs`.

use alloc::vec;
use alloc::vec::Vec;

use super::{desc_embed, CamlParams, ForwardTrace, ModelError, PoolingTrace};
use crate::corpus::PAD;
use crate::numerics::{dot, l2_norm, Matrix};
use crate::training::{bce_loss, LossConfig, LossTerms};

/// Gradients of the document loss (BCE + optional description and L2
/// penalties) with respect to every tensor, returned in a container shaped
/// exactly like the parameters. The PAD embedding row's gradient is
/// discarded so that row stays zero forever.
pub fn backward(
    trace: &ForwardTrace,
    params: &CamlParams,
    y: &[bool],
    cfg: &LossConfig,
) -> Result<(LossTerms, CamlParams), ModelError> {
    debug_assert_eq!(y.len(), params.dims.n_labels);
    let n = trace.doc_len();
    let d_c = params.dims.conv_dim;
    let n_labels = params.dims.n_labels;
    let mut grads = params.zeros_like();
    let mut terms = LossTerms {
        bce: bce_loss(&trace.yhat, y),
        ..Default::default()
    };

    // dL/d(logit_l) for BCE through the sigmoid
    let residual: Vec<f64> = trace
        .yhat
        .iter()
        .zip(y.iter())
        .map(|(&p, &t)| p - if t { 1.0 } else { 0.0 })
        .collect();

    let mut d_hidden = Matrix::zeros(n, d_c);
    match &trace.pooling {
        PoolingTrace::Attention {
            alpha,
            label_vectors,
        } => {
            let mut d_alpha = vec![0.0; n];
            let mut d_logits = vec![0.0; n];
            for label in 0..n_labels {
                let s = residual[label];
                grads.out_bias[label] += s;
                let beta = params.out_weight.row(label);
                let v = label_vectors.row(label);
                {
                    let g = grads.out_weight.row_mut(label);
                    for j in 0..d_c {
                        g[j] += s * v[j];
                    }
                }
                // dL/dv_l = s * beta_l; then through the attention average
                let a = alpha.row(label);
                for pos in 0..n {
                    let h = trace.hidden.row(pos);
                    let mut acc = 0.0;
                    for j in 0..d_c {
                        acc += s * beta[j] * h[j];
                    }
                    d_alpha[pos] = acc;
                }
                // softmax Jacobian: dlogit = a * (d_alpha - <d_alpha, a>)
                let inner = dot(&d_alpha, a);
                for pos in 0..n {
                    d_logits[pos] = a[pos] * (d_alpha[pos] - inner);
                }
                let u = params.attention.row(label);
                let g_u = grads.attention.row_mut(label);
                for pos in 0..n {
                    let h = trace.hidden.row(pos);
                    let dl = d_logits[pos];
                    let dh = d_hidden.row_mut(pos);
                    for j in 0..d_c {
                        g_u[j] += dl * h[j];
                        dh[j] += dl * u[j] + a[pos] * s * beta[j];
                    }
                }
            }
        }
        PoolingTrace::MaxPool { pooled, argmax } => {
            let mut d_pooled = vec![0.0; d_c];
            for label in 0..n_labels {
                let s = residual[label];
                grads.out_bias[label] += s;
                let beta = params.out_weight.row(label);
                let g = grads.out_weight.row_mut(label);
                for j in 0..d_c {
                    g[j] += s * pooled[j];
                    d_pooled[j] += s * beta[j];
                }
            }
            // gradient flows only through the selected positions
            for j in 0..d_c {
                d_hidden[(argmax[j], j)] += d_pooled[j];
            }
        }
    }

    // description-embedding penalty and its gradients
    let positives: Vec<usize> = y
        .iter()
        .enumerate()
        .filter(|(_, &t)| t)
        .map(|(i, _)| i)
        .collect();
    if cfg.lambda > 0.0 && !positives.is_empty() {
        let desc_params = params
            .desc_embedder
            .as_ref()
            .ok_or(ModelError::NoDescEmbedder)?;
        let desc_grads = grads.desc_embedder.as_mut().expect("grads mirror params");
        let weight = cfg.lambda / positives.len() as f64;
        for &label in &positives {
            let ids = cfg
                .descriptions
                .and_then(|d| d[label].as_ref())
                .ok_or(ModelError::MissingDescription { label_index: label })?;
            let dt = desc_embed(
                ids,
                desc_params,
                &params.embeddings,
                params.dims.kernel,
                label,
            )?;
            let beta = params.out_weight.row(label);
            let diff: Vec<f64> = dt.z.iter().zip(beta.iter()).map(|(z, b)| z - b).collect();
            let norm = l2_norm(&diff);
            terms.desc_penalty += weight * norm;
            if norm == 0.0 {
                continue; // subgradient 0 at the kink
            }
            let coeff = weight / norm;
            {
                let g = grads.out_weight.row_mut(label);
                for j in 0..d_c {
                    g[j] -= coeff * diff[j];
                }
            }
            // route dz through the max-pool, then the description conv
            let mut d_hidden_desc = Matrix::zeros(dt.hidden.rows(), d_c);
            for j in 0..d_c {
                d_hidden_desc[(dt.argmax[j], j)] += coeff * diff[j];
            }
            let d_embedded = conv_backward(
                &dt.embedded,
                &dt.hidden,
                &d_hidden_desc,
                params.dims.kernel,
                &desc_params.conv_weight,
                &mut desc_grads.conv_weight,
                &mut desc_grads.conv_bias,
            );
            for (pos, &tid) in dt.token_ids.iter().enumerate() {
                let src = d_embedded.row(pos);
                let dst = grads.embeddings.row_mut(tid);
                for e in 0..src.len() {
                    dst[e] += src[e];
                }
            }
        }
    }

    // document convolution and embeddings
    let d_embedded = conv_backward(
        &trace.embedded,
        &trace.hidden,
        &d_hidden,
        params.dims.kernel,
        &params.conv_weight,
        &mut grads.conv_weight,
        &mut grads.conv_bias,
    );
    for (pos, &tid) in trace.token_ids.iter().enumerate() {
        let scale = trace.dropout.as_ref().map_or(1.0, |m| m[pos]);
        if scale == 0.0 {
            continue;
        }
        let src = d_embedded.row(pos);
        let dst = grads.embeddings.row_mut(tid);
        for e in 0..src.len() {
            dst[e] += scale * src[e];
        }
    }

    // squared-L2 penalty on non-bias tensors
    if cfg.rho > 0.0 {
        let mut sq = 0.0;
        for ((name, p), (_, g)) in params.tensors().into_iter().zip(grads.tensors_mut()) {
            if name.ends_with("bias") {
                continue;
            }
            sq += dot(p, p);
            for (gv, pv) in g.iter_mut().zip(p.iter()) {
                *gv += 2.0 * cfg.rho * pv;
            }
        }
        terms.l2_penalty = cfg.rho * sq;
    }

    grads.embeddings.row_mut(PAD).fill(0.0);
    Ok((terms, grads))
}

/// Backpropagates `d_hidden` through tanh and the zero-padded convolution,
/// accumulating weight/bias gradients and returning the gradient with
/// respect to the convolution input.
fn conv_backward(
    embedded: &Matrix,
    hidden: &Matrix,
    d_hidden: &Matrix,
    kernel: usize,
    weight: &Matrix,
    d_weight: &mut Matrix,
    d_bias: &mut [f64],
) -> Matrix {
    let n = embedded.rows();
    let d_e = embedded.cols();
    let d_c = d_bias.len();
    let left = (kernel - 1) / 2;
    let mut d_embedded = Matrix::zeros(n, d_e);
    let mut d_pre = vec![0.0; d_c];
    for pos in 0..n {
        let dh = d_hidden.row(pos);
        if dh.iter().all(|&x| x == 0.0) {
            continue;
        }
        let h = hidden.row(pos);
        for j in 0..d_c {
            d_pre[j] = dh[j] * (1.0 - h[j] * h[j]);
            d_bias[j] += d_pre[j];
        }
        for tap in 0..kernel {
            let p = pos as isize - left as isize + tap as isize;
            if p < 0 || p >= n as isize {
                continue;
            }
            let p = p as usize;
            let x = embedded.row(p);
            let dx = d_embedded.row_mut(p);
            for e in 0..d_e {
                let w = weight.row(tap * d_e + e);
                let dw = d_weight.row_mut(tap * d_e + e);
                let xv = x[e];
                let mut acc = 0.0;
                for j in 0..d_c {
                    dw[j] += xv * d_pre[j];
                    acc += w[j] * d_pre[j];
                }
                dx[e] += acc;
            }
        }
    }
    d_embedded
}
