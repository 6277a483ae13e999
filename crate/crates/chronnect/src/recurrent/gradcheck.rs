//! Central finite-difference verification of the analytic backward pass.

use crate::error::Result;
use crate::numerics::{Matrix, Rng};
use crate::recurrent::backward::model_backward;
use crate::recurrent::forward::model_forward;
use crate::recurrent::params::{init_params, ModelConfig, ModelParams};

/// Worst observed disagreement for one parameter tensor.
#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_err: f64,
}

/// Relative error scale: disagreement measured against the larger of the two
/// gradient magnitudes, floored at 1 so near-zero gradients are compared
/// absolutely instead of amplifying float noise.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

fn loss_of(
    config: &ModelConfig,
    params: &ModelParams,
    input: &Matrix,
    label: usize,
    weight: f64,
) -> Result<f64> {
    let (probs, _) = model_forward(config, params, input, None)?;
    Ok(-weight * probs[label].max(1e-300).ln())
}

fn check_inner(
    config: &ModelConfig,
    seed: u64,
    eps: f64,
    corrupt: bool,
) -> Result<Vec<TensorCheck>> {
    let mut rng = Rng::new(seed, 0);
    let mut params = init_params(config, &mut rng)?;
    let mut input = Matrix::zeros(config.seq_len, config.input_dim);
    for v in input.values_mut() {
        *v = rng.uniform(-1.0, 1.0);
    }
    // Off-unity class weight so the weighting is part of what gets checked.
    let label = 1usize;
    let weight = 1.3;

    let (probs, cache) = model_forward(config, &params, &input, None)?;
    let mut dlogits = vec![0.0; config.num_classes];
    for (j, d) in dlogits.iter_mut().enumerate() {
        *d = weight * (probs[j] - if j == label { 1.0 } else { 0.0 });
    }
    let mut grads = ModelParams::zeroed(config)?;
    model_backward(config, &params, cache, &dlogits, &mut grads)?;
    if corrupt {
        grads.tensors_mut()[0].values[0] += 0.5;
    }

    let tensor_count = grads.tensors().len();
    let mut checks = Vec::with_capacity(tensor_count);
    for ti in 0..tensor_count {
        let name = grads.tensors()[ti].name.clone();
        let len = grads.tensors()[ti].values.len();
        let mut max_rel = 0.0f64;
        for k in 0..len {
            let orig = params.tensors_mut()[ti].values[k];
            params.tensors_mut()[ti].values[k] = orig + eps;
            let plus = loss_of(config, &params, &input, label, weight)?;
            params.tensors_mut()[ti].values[k] = orig - eps;
            let minus = loss_of(config, &params, &input, label, weight)?;
            params.tensors_mut()[ti].values[k] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let analytic = grads.tensors()[ti].values[k];
            max_rel = max_rel.max(rel_err(analytic, numeric));
        }
        checks.push(TensorCheck {
            name,
            max_rel_err: max_rel,
        });
    }
    Ok(checks)
}

/// Compares analytic BPTT gradients against central finite differences of the
/// weighted cross-entropy loss, per parameter tensor, on a random instance.
pub fn gradient_check(config: &ModelConfig, seed: u64, eps: f64) -> Result<Vec<TensorCheck>> {
    check_inner(config, seed, eps, false)
}

/// Negative control: same check with one analytic gradient entry deliberately
/// perturbed, so the report must flag at least one tensor.
pub fn gradient_check_corrupted(
    config: &ModelConfig,
    seed: u64,
    eps: f64,
) -> Result<Vec<TensorCheck>> {
    check_inner(config, seed, eps, true)
}
