use alloc::vec::Vec;

/// Outcome of comparing an analytic gradient against central differences.
#[derive(Clone, Debug)]
pub struct FiniteDiffReport {
    /// max over entries of |g_analytic - g_fd| / max(1, |g_analytic|, |g_fd|)
    pub max_rel_err: f64,
    /// index of the worst entry, if the parameter vector is non-empty
    pub worst_index: Option<usize>,
    /// indices whose relative error exceeded the tolerance
    pub failures: Vec<usize>,
}

impl FiniteDiffReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `analytic` against central finite differences of `loss` at the
/// current `params`, perturbing one coordinate at a time by `epsilon`.
///
/// `loss` must be a pure function of the parameter vector; `params` is
/// restored to its original contents before returning. Relative error is
/// measured as |g_a - g_fd| / max(1, |g_a|, |g_fd|) and entries exceeding
/// `tol` are reported as failures.
pub fn finite_diff_check(
    params: &mut [f64],
    analytic: &[f64],
    epsilon: f64,
    tol: f64,
    mut loss: impl FnMut(&[f64]) -> f64,
) -> FiniteDiffReport {
    assert_eq!(params.len(), analytic.len(), "gradient length mismatch");
    let mut max_rel_err = 0.0;
    let mut worst_index = None;
    let mut failures = Vec::new();
    for i in 0..params.len() {
        let saved = params[i];
        params[i] = saved + epsilon;
        let up = loss(params);
        params[i] = saved - epsilon;
        let down = loss(params);
        params[i] = saved;
        let fd = (up - down) / (2.0 * epsilon);
        let g = analytic[i];
        let rel = (g - fd).abs() / 1.0f64.max(g.abs()).max(fd.abs());
        if rel > max_rel_err {
            max_rel_err = rel;
            worst_index = Some(i);
        }
        if rel > tol {
            failures.push(i);
        }
    }
    FiniteDiffReport {
        max_rel_err,
        worst_index,
        failures,
    }
}
