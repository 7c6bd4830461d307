//! The single-file checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   b"CAML1"
//! u32     format version (1)
//! u64 len, config JSON        (model choice and hyperparameters)
//! u64     vocabulary fingerprint
//! u64     label-space fingerprint
//! f64     best validation P@8
//! u64     best epoch
//! u32     tensor count
//! per tensor: u32 name len, name, u64 rows, u64 cols, rows*cols f64
//! ```
//!
//! Loading restores the parameters bit for bit and refuses files whose
//! fingerprints do not match the session's vocabulary or label space.

use std::path::Path;

use caml_core::linear::LrParams;
use caml_core::model::{CamlParams, DescEmbedderParams, ModelDims, ModelKind};
use caml_core::numerics::Matrix;
use caml_core::training::{Checkpoint, TrainConfig, TrainedModel};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

const MAGIC: &[u8; 5] = b"CAML1";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ConfigDto {
    model: String,
    embed_dim: usize,
    conv_dim: usize,
    kernel: usize,
    dropout: f64,
    rho: f64,
    eta: f64,
    lambda: f64,
    batch_size: usize,
    patience: usize,
    max_epochs: usize,
    seed: u64,
}

fn model_name(model: &TrainedModel) -> &'static str {
    match model {
        TrainedModel::Neural(_, ModelKind::Caml) => "caml",
        TrainedModel::Neural(_, ModelKind::MaxPoolCnn) => "cnn",
        TrainedModel::Linear(_) => "lr",
    }
}

fn config_dto(checkpoint: &Checkpoint) -> ConfigDto {
    let c = &checkpoint.config;
    ConfigDto {
        model: model_name(&checkpoint.model).to_string(),
        embed_dim: c.embed_dim,
        conv_dim: c.conv_dim,
        kernel: c.kernel,
        dropout: c.dropout,
        rho: c.rho,
        eta: c.eta,
        lambda: c.lambda,
        batch_size: c.batch_size,
        patience: c.patience,
        max_epochs: c.max_epochs,
        seed: c.seed,
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn tensor(&mut self, name: &str, rows: usize, cols: usize, data: &[f64]) {
        debug_assert_eq!(rows * cols, data.len());
        self.buf
            .extend_from_slice(&(name.len() as u32).to_le_bytes());
        self.buf.extend_from_slice(name.as_bytes());
        self.buf.extend_from_slice(&(rows as u64).to_le_bytes());
        self.buf.extend_from_slice(&(cols as u64).to_le_bytes());
        for v in data {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.buf.extend_from_slice(&VERSION.to_le_bytes());
    let config = serde_json::to_string(&config_dto(checkpoint))?;
    w.buf
        .extend_from_slice(&(config.len() as u64).to_le_bytes());
    w.buf.extend_from_slice(config.as_bytes());
    w.buf
        .extend_from_slice(&checkpoint.vocab_fingerprint.to_le_bytes());
    w.buf
        .extend_from_slice(&checkpoint.label_fingerprint.to_le_bytes());
    w.buf
        .extend_from_slice(&checkpoint.best_val_p8.to_le_bytes());
    w.buf
        .extend_from_slice(&(checkpoint.epoch as u64).to_le_bytes());

    match &checkpoint.model {
        TrainedModel::Neural(params, _) => {
            let tensors = params.tensors();
            w.buf
                .extend_from_slice(&(tensors.len() as u32).to_le_bytes());
            w.tensor(
                "embeddings",
                params.embeddings.rows(),
                params.embeddings.cols(),
                params.embeddings.data(),
            );
            w.tensor(
                "conv_weight",
                params.conv_weight.rows(),
                params.conv_weight.cols(),
                params.conv_weight.data(),
            );
            w.tensor("conv_bias", 1, params.conv_bias.len(), &params.conv_bias);
            w.tensor(
                "attention",
                params.attention.rows(),
                params.attention.cols(),
                params.attention.data(),
            );
            w.tensor(
                "out_weight",
                params.out_weight.rows(),
                params.out_weight.cols(),
                params.out_weight.data(),
            );
            w.tensor("out_bias", 1, params.out_bias.len(), &params.out_bias);
            if let Some(desc) = &params.desc_embedder {
                w.tensor(
                    "desc_conv_weight",
                    desc.conv_weight.rows(),
                    desc.conv_weight.cols(),
                    desc.conv_weight.data(),
                );
                w.tensor("desc_conv_bias", 1, desc.conv_bias.len(), &desc.conv_bias);
            }
        }
        TrainedModel::Linear(params) => {
            w.buf.extend_from_slice(&3u32.to_le_bytes());
            w.tensor(
                "lr_weights",
                params.weights.rows(),
                params.weights.cols(),
                params.weights.data(),
            );
            w.tensor("lr_bias", 1, params.bias.len(), &params.bias);
            let trained: Vec<f64> = params
                .trained
                .iter()
                .map(|&t| if t { 1.0 } else { 0.0 })
                .collect();
            w.tensor("lr_trained", 1, trained.len(), &trained);
        }
    }
    super::write_atomic(path, &w.buf)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: String,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, what: &str) -> CliError {
        CliError::data(format!("corrupt checkpoint {}: {what}", self.path))
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(self.corrupt(what));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn tensor(&mut self) -> Result<(String, Matrix)> {
        let name_len = self.u32("tensor name length")? as usize;
        let name = String::from_utf8(self.take(name_len, "tensor name")?.to_vec())
            .map_err(|_| self.corrupt("tensor name encoding"))?;
        let rows = self.u64("tensor rows")? as usize;
        let cols = self.u64("tensor cols")? as usize;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| self.corrupt("tensor dimensions overflow"))?;
        let bytes = self.take(count * 8, "tensor data")?;
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((name, Matrix::from_vec(rows, cols, data)))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::data(format!("cannot read checkpoint {}: {e}", path.display())))?;
    let mut r = Reader {
        buf: &bytes,
        pos: 0,
        path: path.display().to_string(),
    };
    if r.take(5, "magic")? != MAGIC {
        return Err(r.corrupt("bad magic bytes"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(r.corrupt(&format!("unsupported version {version}")));
    }
    let config_len = r.u64("config length")? as usize;
    let config_bytes = r.take(config_len, "config JSON")?;
    let dto: ConfigDto =
        serde_json::from_slice(config_bytes).map_err(|_| r.corrupt("config JSON"))?;
    let vocab_fingerprint = r.u64("vocab fingerprint")?;
    let label_fingerprint = r.u64("label fingerprint")?;
    let best_val_p8 = r.f64("best validation score")?;
    let epoch = r.u64("epoch")? as usize;
    let n_tensors = r.u32("tensor count")? as usize;
    let mut tensors = std::collections::BTreeMap::new();
    let mut order = Vec::new();
    for _ in 0..n_tensors {
        let (name, matrix) = r.tensor()?;
        order.push(name.clone());
        tensors.insert(name, matrix);
    }
    if r.pos != r.buf.len() {
        return Err(r.corrupt("trailing bytes"));
    }

    let kind = match dto.model.as_str() {
        "caml" => Some(ModelKind::Caml),
        "cnn" => Some(ModelKind::MaxPoolCnn),
        "lr" => None,
        other => return Err(r.corrupt(&format!("unknown model {other:?}"))),
    };
    let mut take = |name: &str| -> Result<Matrix> {
        tensors
            .remove(name)
            .ok_or_else(|| CliError::data(format!("corrupt checkpoint: missing tensor {name}")))
    };
    let model = match kind {
        Some(kind) => {
            let embeddings = take("embeddings")?;
            let conv_weight = take("conv_weight")?;
            let conv_bias = take("conv_bias")?.data().to_vec();
            let attention = take("attention")?;
            let out_weight = take("out_weight")?;
            let out_bias = take("out_bias")?.data().to_vec();
            let desc_embedder = if order.iter().any(|n| n == "desc_conv_weight") {
                Some(DescEmbedderParams {
                    conv_weight: take("desc_conv_weight")?,
                    conv_bias: take("desc_conv_bias")?.data().to_vec(),
                })
            } else {
                None
            };
            let dims = ModelDims {
                vocab_size: embeddings.rows(),
                embed_dim: embeddings.cols(),
                conv_dim: conv_bias.len(),
                kernel: dto.kernel,
                n_labels: out_bias.len(),
            };
            if conv_weight.rows() != dims.kernel * dims.embed_dim
                || conv_weight.cols() != dims.conv_dim
                || attention.rows() != dims.n_labels
                || out_weight.rows() != dims.n_labels
            {
                return Err(CliError::data(
                    "corrupt checkpoint: inconsistent tensor shapes".to_string(),
                ));
            }
            TrainedModel::Neural(
                CamlParams {
                    dims,
                    embeddings,
                    conv_weight,
                    conv_bias,
                    attention,
                    out_weight,
                    out_bias,
                    desc_embedder,
                },
                kind,
            )
        }
        None => {
            let weights = take("lr_weights")?;
            let bias = take("lr_bias")?.data().to_vec();
            let trained = take("lr_trained")?
                .data()
                .iter()
                .map(|&t| t != 0.0)
                .collect();
            TrainedModel::Linear(LrParams {
                weights,
                bias,
                trained,
            })
        }
    };

    Ok(Checkpoint {
        model,
        vocab_fingerprint,
        label_fingerprint,
        config: TrainConfig {
            model_kind: kind.unwrap_or(ModelKind::Caml),
            embed_dim: dto.embed_dim,
            conv_dim: dto.conv_dim,
            kernel: dto.kernel,
            dropout: dto.dropout,
            rho: dto.rho,
            eta: dto.eta,
            lambda: dto.lambda,
            batch_size: dto.batch_size,
            patience: dto.patience,
            max_epochs: dto.max_epochs,
            seed: dto.seed,
        },
        best_val_p8,
        epoch,
    })
}

/// The fingerprint gate: evaluation and explanation refuse checkpoints
/// whose preprocessing differs from the loaded dataset's.
pub fn verify_compatibility(
    checkpoint: &Checkpoint,
    vocab_fingerprint: u64,
    label_fingerprint: u64,
) -> Result<()> {
    if checkpoint.vocab_fingerprint != vocab_fingerprint {
        return Err(CliError::data(
            "checkpoint was trained with a different vocabulary (fingerprint mismatch)".to_string(),
        ));
    }
    if checkpoint.label_fingerprint != label_fingerprint {
        return Err(CliError::data(
            "checkpoint was trained with a different label space (fingerprint mismatch)"
                .to_string(),
        ));
    }
    Ok(())
}
