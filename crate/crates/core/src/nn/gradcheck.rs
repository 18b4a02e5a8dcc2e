//! Central finite-difference check of [`Mlp::gradient`].

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use super::mlp::{Example, Mlp};

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor so that gradients near zero are judged on absolute
/// error instead.
const REL_FLOOR: f64 = 1e-7;

/// Compares analytic and numeric gradients on a random `fraction` of the
/// parameters (at least one) and returns the largest relative error
/// `|a − n| / max(|a| + |n|, 1e-7)`. Dropout is not applied.
pub fn gradient_check<R: Rng + ?Sized>(mlp: &Mlp, examples: &[Example], l2: f64, fraction: f64, rng: &mut R) -> f64 {
    let analytic = mlp.gradient(examples, l2);
    let n = mlp.param_count();
    let k = (libm::ceil(n as f64 * fraction) as usize).clamp(1, n);
    let sample: Vec<usize> = index::sample(rng, n, k).into_vec();

    let mut probe = mlp.clone();
    sample
        .into_iter()
        .map(|i| {
            let original = probe.params[i];
            probe.params[i] = original + FD_STEP;
            let up = probe.loss(examples, l2);
            probe.params[i] = original - FD_STEP;
            let down = probe.loss(examples, l2);
            probe.params[i] = original;
            let numeric = (up - down) / (2.0 * FD_STEP);
            (analytic[i] - numeric).abs() / (analytic[i].abs() + numeric.abs()).max(REL_FLOOR)
        })
        .fold(0.0, f64::max)
}
