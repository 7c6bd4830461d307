use caml_core::model::{backward, forward, CamlParams, ModelDims, ModelKind};
use caml_core::numerics::{finite_diff_check, Rng};
use caml_core::training::{loss, LossConfig};

use crate::{CliError, Result};

pub struct GradcheckArgs {
    pub tolerance: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// test hook: flips the sign of one analytic gradient tensor, which
    /// the check must catch
    pub inject_fault: bool,
}

#[derive(Debug)]
pub struct GradcheckOutcome {
    /// (tensor name, max relative error, passed)
    pub tensors: Vec<(String, f64, bool)>,
    pub passed: bool,
}

/// Verifies every analytic gradient of a small randomly initialized model
/// (both penalties enabled, dropout off) against central finite
/// differences. Exit code 0 iff every tensor passes the tolerance.
pub fn run_gradcheck(args: &GradcheckArgs) -> Result<GradcheckOutcome> {
    let dims = ModelDims {
        vocab_size: 20,
        embed_dim: 5,
        conv_dim: 4,
        kernel: 3,
        n_labels: 6,
    };
    let params = CamlParams::init(dims, None, true, &Rng::new(args.seed));
    let mut rng = Rng::new(args.seed ^ 0x5eed);
    let doc: Vec<usize> = (0..10)
        .map(|_| 1 + rng.below(dims.vocab_size - 1))
        .collect();
    let y = vec![true, false, true, false, false, true];
    let descriptions: Vec<Option<Vec<usize>>> = (0..dims.n_labels)
        .map(|_| {
            let len = 2 + rng.below(3);
            Some(
                (0..len)
                    .map(|_| 1 + rng.below(dims.vocab_size - 1))
                    .collect(),
            )
        })
        .collect();
    let cfg = LossConfig {
        lambda: 0.1,
        rho: 0.01,
        descriptions: Some(&descriptions),
    };

    let trace = forward(&doc, &params, ModelKind::Caml, None);
    let (_, grads) =
        backward(&trace, &params, &y, &cfg).map_err(|e| CliError::numeric(e.to_string()))?;

    let mut outcome = GradcheckOutcome {
        tensors: Vec::new(),
        passed: true,
    };
    let tensor_names: Vec<&'static str> = params.tensors().iter().map(|(n, _)| *n).collect();
    for (idx, name) in tensor_names.iter().enumerate() {
        let mut analytic: Vec<f64> = grads
            .tensors()
            .into_iter()
            .find(|(n, _)| n == name)
            .expect("gradient tensor exists")
            .1
            .to_vec();
        if args.inject_fault && idx == 1 {
            for g in &mut analytic {
                *g = -*g;
            }
        }
        let mut current: Vec<f64> = params
            .tensors()
            .into_iter()
            .find(|(n, _)| n == name)
            .unwrap()
            .1
            .to_vec();
        let report = finite_diff_check(
            &mut current,
            &analytic,
            args.epsilon,
            args.tolerance,
            |values| {
                let mut perturbed = params.clone();
                perturbed
                    .tensors_mut()
                    .into_iter()
                    .find(|(n, _)| n == name)
                    .unwrap()
                    .1
                    .copy_from_slice(values);
                let trace = forward(&doc, &perturbed, ModelKind::Caml, None);
                loss(&trace.yhat, &y, &perturbed, &cfg)
                    .expect("descriptions provided for all labels")
                    .total()
            },
        );
        let passed = report.passed();
        outcome.passed &= passed;
        outcome
            .tensors
            .push((name.to_string(), report.max_rel_err, passed));
    }

    println!(
        "gradient check (tolerance {:.1e}, epsilon {:.1e})",
        args.tolerance, args.epsilon
    );
    for (name, err, passed) in &outcome.tensors {
        println!(
            "  {:<18} max rel err {:>12.3e}  {}",
            name,
            err,
            if *passed { "ok" } else { "FAIL" }
        );
    }
    if !outcome.passed {
        return Err(CliError::numeric(
            "analytic gradients disagree with finite differences".to_string(),
        ));
    }
    Ok(outcome)
}
