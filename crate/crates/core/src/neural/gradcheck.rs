//! Central finite-difference comparison against analytic gradients.

use super::params::ParamStore;

#[derive(Debug, Clone)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Parameter name and flat index of the worst component.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Relative error with a floor on the denominator so that components whose
/// true gradient is ~0 are compared absolutely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// `loss(store, backward)` must return the loss and, when `backward` is set,
/// accumulate its gradient into `store`.
pub fn check_gradients<F>(store: &mut ParamStore, eps: f64, mut loss: F) -> GradCheck
where
    F: FnMut(&mut ParamStore, bool) -> f64,
{
    store.zero_grad();
    loss(store, true);
    let analytic: Vec<Vec<f64>> = store.params().iter().map(|p| p.grad.iter().copied().collect()).collect();
    let mut report = GradCheck { max_relative_error: 0.0, worst: None, checked: 0 };
    let ids: Vec<_> = store.ids().collect();
    for (pi, id) in ids.into_iter().enumerate() {
        let n = store.value(id).len();
        for k in 0..n {
            let original = store.value(id).as_slice().expect("contiguous")[k];
            store.value_mut(id).as_slice_mut().expect("contiguous")[k] = original + eps;
            let plus = loss(store, false);
            store.value_mut(id).as_slice_mut().expect("contiguous")[k] = original - eps;
            let minus = loss(store, false);
            store.value_mut(id).as_slice_mut().expect("contiguous")[k] = original;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(analytic[pi][k], numeric);
            report.checked += 1;
            if err > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = report.max_relative_error.max(err);
                report.worst = Some((store.param(id).name.clone(), k));
            }
        }
    }
    report
}
