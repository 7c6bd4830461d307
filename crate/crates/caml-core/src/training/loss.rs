use alloc::vec::Vec;

use crate::model::{desc_embed, CamlParams, ModelError};
use crate::numerics::l2_norm;

/// Probabilities are clamped to [CLAMP, 1-CLAMP] before taking logs, so
/// the loss stays finite for any model output. Gradients use the standard
/// unclamped sigmoid identity.
pub const CLAMP: f64 = 1e-12;

/// Regularization settings for one loss evaluation.
///
/// `descriptions` holds per-label-index token-id sequences and is only
/// consulted when `lambda > 0`.
#[derive(Clone, Copy, Debug)]
pub struct LossConfig<'a> {
    /// weight of the description-embedding penalty (0 disables it)
    pub lambda: f64,
    /// weight of the squared-L2 penalty on non-bias tensors (0 disables it)
    pub rho: f64,
    pub descriptions: Option<&'a [Option<Vec<usize>>]>,
}

impl LossConfig<'static> {
    pub const PLAIN: LossConfig<'static> = LossConfig {
        lambda: 0.0,
        rho: 0.0,
        descriptions: None,
    };
}

/// Additive decomposition of one document's loss.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub bce: f64,
    pub desc_penalty: f64,
    pub l2_penalty: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.bce + self.desc_penalty + self.l2_penalty
    }
}

/// Binary cross-entropy summed over labels, with clamped probabilities.
pub fn bce_loss(yhat: &[f64], y: &[bool]) -> f64 {
    debug_assert_eq!(yhat.len(), y.len());
    let mut loss = 0.0;
    for (&p, &t) in yhat.iter().zip(y.iter()) {
        let p = p.clamp(CLAMP, 1.0 - CLAMP);
        loss -= if t { libm::log(p) } else { libm::log(1.0 - p) };
    }
    loss
}

/// Squared L2 penalty over every non-bias tensor (embeddings, both
/// convolutions, attention, and output weights), scaled by rho.
pub fn l2_penalty(params: &CamlParams, rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let mut sq = 0.0;
    for (name, t) in params.tensors() {
        if name.ends_with("bias") {
            continue;
        }
        sq += crate::numerics::dot(t, t);
    }
    rho * sq
}

/// The description penalty: lambda/n_y times the sum over positive labels
/// of the L2 distance between the embedded description and that label's
/// output weights. Zero when lambda is 0 or the example has no positives.
pub fn desc_penalty(
    params: &CamlParams,
    y: &[bool],
    lambda: f64,
    descriptions: Option<&[Option<Vec<usize>>]>,
) -> Result<f64, ModelError> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let positives: Vec<usize> = y
        .iter()
        .enumerate()
        .filter(|(_, &t)| t)
        .map(|(i, _)| i)
        .collect();
    if positives.is_empty() {
        return Ok(0.0);
    }
    let desc_params = params
        .desc_embedder
        .as_ref()
        .ok_or(ModelError::NoDescEmbedder)?;
    let mut sum = 0.0;
    for &label in &positives {
        let ids = descriptions
            .and_then(|d| d[label].as_ref())
            .ok_or(ModelError::MissingDescription { label_index: label })?;
        let trace = desc_embed(
            ids,
            desc_params,
            &params.embeddings,
            params.dims.kernel,
            label,
        )?;
        let diff: Vec<f64> = trace
            .z
            .iter()
            .zip(params.out_weight.row(label))
            .map(|(z, b)| z - b)
            .collect();
        sum += l2_norm(&diff);
    }
    Ok(lambda / positives.len() as f64 * sum)
}

/// Full per-example loss: BCE plus the rho-weighted squared-L2 term and
/// the lambda-weighted description term.
pub fn loss(
    yhat: &[f64],
    y: &[bool],
    params: &CamlParams,
    cfg: &LossConfig,
) -> Result<LossTerms, ModelError> {
    Ok(LossTerms {
        bce: bce_loss(yhat, y),
        desc_penalty: desc_penalty(params, y, cfg.lambda, cfg.descriptions)?,
        l2_penalty: l2_penalty(params, cfg.rho),
    })
}
