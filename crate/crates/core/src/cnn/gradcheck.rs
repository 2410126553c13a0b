//! Finite-difference verification of the hand-written backward pass.
//! Everything runs in `f64` regardless of the model's scalar type.

use super::{cross_entropy, CnnModel, Tensor3};
use crate::error::Result;
use crate::scalar::Real;

const STEP: f64 = 1e-4;
const FLOOR: f64 = 1e-7;

/// `|a - n| / max(|a|, |n|, 1e-7)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

fn loss(model: &CnnModel<f64>, input: &Tensor3<f64>, truth: usize) -> Result<f64> {
    let probs = model.forward_tensor(input.clone(), None)?;
    Ok(cross_entropy(&probs, truth))
}

/// Largest relative error between backprop and central differences over
/// the given `(slice, index)` parameter positions. Dropout is inactive.
pub fn gradient_check_params<T: Real>(
    model: &CnnModel<T>,
    input: &Tensor3<T>,
    truth: usize,
    positions: &[(usize, usize)],
) -> Result<f64> {
    let mut m = model.cast::<f64>();
    let x = Tensor3::from_vec(
        input.height,
        input.width,
        input.channels,
        input.values.iter().map(|v| v.f64()).collect(),
    )?;
    let mut grads = m.zero_grads();
    let trace = m.forward_trace(x.clone(), None)?;
    m.backward(&trace, truth, &mut grads);

    let mut worst = 0.0f64;
    for &(slot, idx) in positions {
        let original = m.param_slices()[slot][idx];
        m.param_slices_mut()[slot][idx] = original + STEP;
        let plus = loss(&m, &x, truth)?;
        m.param_slices_mut()[slot][idx] = original - STEP;
        let minus = loss(&m, &x, truth)?;
        m.param_slices_mut()[slot][idx] = original;
        let numeric = (plus - minus) / (2.0 * STEP);
        worst = worst.max(relative_error(grads[slot][idx], numeric));
    }
    Ok(worst)
}

/// [`gradient_check_params`] over every parameter.
pub fn gradient_check<T: Real>(model: &CnnModel<T>, input: &Tensor3<T>, truth: usize) -> Result<f64> {
    let positions: Vec<(usize, usize)> = model
        .param_slices()
        .iter()
        .enumerate()
        .flat_map(|(s, slice)| (0..slice.len()).map(move |i| (s, i)))
        .collect();
    gradient_check_params(model, input, truth, &positions)
}
