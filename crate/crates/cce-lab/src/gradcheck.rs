//! Central finite-difference gradient checking.
//!
//! The loss and backprop gradients in this crate are hand-derived; this
//! module provides the independent numerical oracle they are validated
//! against. The oracle only ever evaluates loss *values*, so it shares
//! no code with the analytic gradient paths it checks.

/// Central-difference gradient of `f` at `x`:
/// `df/dx_i ≈ (f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn central_difference<F>(f: F, x: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let plus = f(&probe);
        probe[i] = x[i] - step;
        let minus = f(&probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Worst elementwise deviation between an analytic and a numerical
/// gradient, as `(max_rel_error, max_abs_error)`.
///
/// Relative error uses `max(|analytic|, |numerical|)` as the scale; an
/// entry whose absolute error sits below `abs_floor` is treated as
/// matching, since central differences bottom out near
/// `eps * |f| / step` regardless of implementation correctness.
pub fn max_errors(analytic: &[f64], numerical: &[f64], abs_floor: f64) -> (f64, f64) {
    assert_eq!(analytic.len(), numerical.len());
    let mut max_rel = 0.0f64;
    let mut max_abs = 0.0f64;
    for (&a, &n) in analytic.iter().zip(numerical) {
        let abs = (a - n).abs();
        max_abs = max_abs.max(abs);
        if abs <= abs_floor {
            continue;
        }
        let scale = a.abs().max(n.abs());
        if scale > 0.0 {
            max_rel = max_rel.max(abs / scale);
        }
    }
    (max_rel, max_abs)
}
