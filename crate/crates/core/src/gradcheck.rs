//! Central finite-difference gradient checking.
//!
//! The two loss values of a central difference are each rounded to the
//! nearest `f64`, so the difference quotient is only known to within
//! `(ulp(f₊) + ulp(f₋)) / 2ε`. On a loss of magnitude 50 at `ε = 1e-5` that
//! is about `1e-9`, which swamps the relative error of gradient entries
//! below `1e-5`. The reported error therefore discounts this resolution
//! before dividing; the undiscounted figure is kept alongside.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::optim::Tensors;

/// Gradients smaller than this in magnitude are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    /// Largest relative error after discounting the difference quotient's
    /// rounding resolution.
    pub max_rel_error: f64,
    /// Largest relative error without the discount.
    pub max_raw_rel_error: f64,
    /// Coordinates where both the analytic and numeric gradient were exactly 0.
    pub exact_zeros: usize,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_raw_rel_error: f64,
    pub tensors: Vec<TensorCheck>,
}

/// Spacing of `f64` values at `x`.
pub fn ulp(x: f64) -> f64 {
    let x = x.abs();
    x.next_up() - x
}

/// `max(|a - n| - resolution, 0) / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn discounted_relative_error(analytic: f64, numeric: f64, resolution: f64) -> f64 {
    let diff = ((analytic - numeric).abs() - resolution).max(0.0);
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares `analytic` against `(f(θ+ε) − f(θ−ε)) / 2ε` on up to `per_tensor`
/// coordinates of every tensor (all of them when the tensor is smaller),
/// sampled under `seed`. `params` is restored exactly afterwards.
pub fn check<P: Tensors>(
    params: &mut P,
    analytic: &P,
    loss: impl Fn(&P) -> f64,
    eps: f64,
    per_tensor: usize,
    seed: u64,
) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grads: Vec<(String, Vec<f64>)> = analytic
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.data.to_vec()))
        .collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_raw_rel_error: 0.0,
        tensors: Vec::new(),
    };
    for (ti, (name, grad)) in grads.iter().enumerate() {
        let len = grad.len();
        let coords: Vec<usize> = if len <= per_tensor {
            (0..len).collect()
        } else {
            let mut c = sample(&mut rng, len, per_tensor).into_vec();
            c.sort_unstable();
            c
        };
        let mut tc = TensorCheck {
            name: name.clone(),
            checked: coords.len(),
            max_rel_error: 0.0,
            max_raw_rel_error: 0.0,
            exact_zeros: 0,
        };
        for &k in &coords {
            let original = params.tensors_mut()[ti][k];
            params.tensors_mut()[ti][k] = original + eps;
            let plus = loss(params);
            params.tensors_mut()[ti][k] = original - eps;
            let minus = loss(params);
            params.tensors_mut()[ti][k] = original;
            let numeric = (plus - minus) / (2.0 * eps);
            let resolution = (ulp(plus) + ulp(minus)) / (2.0 * eps);
            if numeric == 0.0 && grad[k] == 0.0 {
                tc.exact_zeros += 1;
            }
            tc.max_rel_error = tc
                .max_rel_error
                .max(discounted_relative_error(grad[k], numeric, resolution));
            tc.max_raw_rel_error = tc.max_raw_rel_error.max(relative_error(grad[k], numeric));
        }
        report.max_rel_error = report.max_rel_error.max(tc.max_rel_error);
        report.max_raw_rel_error = report.max_raw_rel_error.max(tc.max_raw_rel_error);
        report.tensors.push(tc);
    }
    report
}
