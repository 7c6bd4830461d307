use crate::model::CamlParams;

/// Adam moment-decay settings; the usual defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the parameters, plus the
/// step counter used for bias correction.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: CamlParams,
    v: CamlParams,
    t: u64,
    hyper: AdamHyper,
}

impl AdamState {
    pub fn new(params: &CamlParams, hyper: AdamHyper) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            hyper,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update, in place.
    pub fn step(&mut self, params: &mut CamlParams, grads: &CamlParams, eta: f64) {
        self.t += 1;
        let AdamHyper {
            beta1,
            beta2,
            epsilon,
        } = self.hyper;
        let bc1 = 1.0 - libm::pow(beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(beta2, self.t as f64);
        let mut p_tensors = params.tensors_mut();
        let mut m_tensors = self.m.tensors_mut();
        let mut v_tensors = self.v.tensors_mut();
        let g_tensors = grads.tensors();
        for i in 0..p_tensors.len() {
            let p = &mut p_tensors[i].1;
            let g = g_tensors[i].1;
            let m = &mut m_tensors[i].1;
            let v = &mut v_tensors[i].1;
            for j in 0..p.len() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= eta * m_hat / (libm::sqrt(v_hat) + epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CamlParams, ModelDims};
    use crate::numerics::Rng;

    fn params() -> CamlParams {
        let dims = ModelDims {
            vocab_size: 6,
            embed_dim: 2,
            conv_dim: 3,
            kernel: 2,
            n_labels: 2,
        };
        CamlParams::init(dims, None, false, &Rng::new(77))
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut p = params();
        let before = p.clone();
        let zero = p.zeros_like();
        let mut adam = AdamState::new(&p, AdamHyper::default());
        for _ in 0..5 {
            adam.step(&mut p, &zero, 0.01);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn constant_gradient_step_approaches_eta() {
        // with a constant gradient the bias-corrected ratio m/sqrt(v) tends
        // to sign(g), so each coordinate moves by ~eta per step
        let mut p = params();
        let mut g = p.zeros_like();
        for (_, t) in g.tensors_mut() {
            for x in t {
                *x = -3.7;
            }
        }
        let mut adam = AdamState::new(&p, AdamHyper::default());
        let eta = 0.01;
        for _ in 0..200 {
            adam.step(&mut p, &g, eta);
        }
        let before = p.clone();
        adam.step(&mut p, &g, eta);
        for ((_, a), (_, b)) in before.tensors().into_iter().zip(p.tensors()) {
            for (x, y) in a.iter().zip(b.iter()) {
                let delta = y - x;
                // gradient is negative, so the step is +eta
                assert!((delta - eta).abs() < 1e-3 * eta, "step {delta}");
            }
        }
    }

    #[test]
    fn updates_are_deterministic() {
        let run = || {
            let mut p = params();
            let mut g = p.zeros_like();
            for (_, t) in g.tensors_mut() {
                for (i, x) in t.iter_mut().enumerate() {
                    *x = (i as f64 * 0.37).sin();
                }
            }
            let mut adam = AdamState::new(&p, AdamHyper::default());
            for _ in 0..50 {
                adam.step(&mut p, &g, 0.003);
            }
            p
        };
        assert_eq!(run(), run());
    }
}
