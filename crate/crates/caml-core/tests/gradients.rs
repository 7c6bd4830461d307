//! Finite-difference verification of every analytic gradient: embeddings,
//! convolution weight/bias, attention vectors, output weights/biases, and
//! the description embedder, for both model kinds, with and without the
//! description and L2 penalties and under a fixed dropout mask.

use caml_core::model::{backward, forward, CamlParams, ModelDims, ModelKind};
use caml_core::numerics::{finite_diff_check, Rng};
use caml_core::training::{loss, LossConfig};

const EPSILON: f64 = 1e-5;
const TOL: f64 = 1e-4;

struct Fixture {
    params: CamlParams,
    doc: Vec<usize>,
    y: Vec<bool>,
    descriptions: Vec<Option<Vec<usize>>>,
    kind: ModelKind,
    dropout: Option<Vec<f64>>,
}

impl Fixture {
    /// The reference tiny model: |V|=20, d_e=5, d_c=4, k=3, |L|=6, N=10.
    fn new(kind: ModelKind, seed: u64) -> Fixture {
        let dims = ModelDims {
            vocab_size: 20,
            embed_dim: 5,
            conv_dim: 4,
            kernel: 3,
            n_labels: 6,
        };
        let params = CamlParams::init(dims, None, true, &Rng::new(seed));
        let mut rng = Rng::new(seed ^ 0xabcdef);
        // token ids avoid PAD (0); UNK (1) is trainable and allowed
        let doc: Vec<usize> = (0..10).map(|_| 1 + rng.below(19)).collect();
        let y = vec![true, false, true, false, false, true];
        let descriptions = (0..6)
            .map(|_| {
                let len = 2 + rng.below(3);
                Some((0..len).map(|_| 1 + rng.below(19)).collect())
            })
            .collect();
        Fixture {
            params,
            doc,
            y,
            descriptions,
            kind,
            dropout: None,
        }
    }

    fn loss_at(&self, params: &CamlParams, cfg: &LossConfig) -> f64 {
        let trace = forward(&self.doc, params, self.kind, self.dropout.clone());
        loss(&trace.yhat, &self.y, params, cfg).unwrap().total()
    }

    /// Checks one named tensor's analytic gradient against central
    /// differences; returns the max relative error.
    fn check_tensor(&self, name: &str, cfg: &LossConfig) -> f64 {
        let trace = forward(&self.doc, &self.params, self.kind, self.dropout.clone());
        let (_, grads) = backward(&trace, &self.params, &self.y, cfg).unwrap();
        let analytic: Vec<f64> = grads
            .tensors()
            .into_iter()
            .find(|(n, _)| *n == name)
            .unwrap_or_else(|| panic!("no tensor {name}"))
            .1
            .to_vec();
        let mut current: Vec<f64> = self
            .params
            .tensors()
            .into_iter()
            .find(|(n, _)| *n == name)
            .unwrap()
            .1
            .to_vec();
        let report = finite_diff_check(&mut current, &analytic, EPSILON, TOL, |perturbed| {
            let mut params = self.params.clone();
            params
                .tensors_mut()
                .into_iter()
                .find(|(n, _)| *n == name)
                .unwrap()
                .1
                .copy_from_slice(perturbed);
            self.loss_at(&params, cfg)
        });
        assert!(
            report.passed(),
            "{name}: max rel err {} at {:?} ({} failures)",
            report.max_rel_err,
            report.worst_index,
            report.failures.len()
        );
        report.max_rel_err
    }

    fn check_all(&self, cfg: &LossConfig) {
        for (name, _) in self.params.tensors() {
            self.check_tensor(name, cfg);
        }
    }
}

#[test]
fn caml_bce_only_gradients_match_finite_differences() {
    let fx = Fixture::new(ModelKind::Caml, 101);
    fx.check_all(&LossConfig::PLAIN);
}

#[test]
fn caml_with_desc_and_l2_penalties_matches_finite_differences() {
    let fx = Fixture::new(ModelKind::Caml, 202);
    let cfg = LossConfig {
        lambda: 0.1,
        rho: 0.01,
        descriptions: Some(&fx.descriptions),
    };
    fx.check_all(&cfg);
}

#[test]
fn maxpool_gradients_match_finite_differences() {
    let fx = Fixture::new(ModelKind::MaxPoolCnn, 303);
    let cfg = LossConfig {
        lambda: 0.0,
        rho: 0.01,
        descriptions: None,
    };
    fx.check_all(&cfg);
}

#[test]
fn gradients_under_fixed_dropout_mask_match_finite_differences() {
    let mut fx = Fixture::new(ModelKind::Caml, 404);
    // a fixed inverted-dropout mask at q = 0.25
    let mut rng = Rng::new(99);
    fx.dropout = Some(
        (0..fx.doc.len())
            .map(|_| {
                if rng.next_f64() < 0.25 {
                    0.0
                } else {
                    1.0 / 0.75
                }
            })
            .collect(),
    );
    fx.check_all(&LossConfig::PLAIN);
}

#[test]
fn lambda_only_path_matches_finite_differences() {
    let fx = Fixture::new(ModelKind::Caml, 505);
    let cfg = LossConfig {
        lambda: 10.0,
        rho: 0.0,
        descriptions: Some(&fx.descriptions),
    };
    fx.check_all(&cfg);
}

#[test]
fn pad_row_gradient_is_always_zero() {
    let fx = Fixture::new(ModelKind::Caml, 606);
    let cfg = LossConfig {
        lambda: 0.1,
        rho: 0.01,
        descriptions: Some(&fx.descriptions),
    };
    let trace = forward(&fx.doc, &fx.params, fx.kind, None);
    let (_, grads) = backward(&trace, &fx.params, &fx.y, &cfg).unwrap();
    let d_e = fx.params.dims.embed_dim;
    assert!(grads.embeddings.row(0).iter().all(|&g| g == 0.0));
    assert_eq!(grads.embeddings.row(0).len(), d_e);
}
