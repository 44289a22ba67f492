//! Forward evaluation of the network, the three likelihoods, the Gaussian
//! prior, and the unnormalized log-target with its gradient.
//!
//! Cross-entropy terms are always computed from pre-activation outputs
//! ("logits") in stabilized form — `y*z - softplus(z)` for the Bernoulli case
//! and `sum_c y_c z_c - logsumexp(z)` for the multinomial case — so no path
//! ever evaluates `log(0)`. Dropped additive constants per likelihood: the
//! Gaussian case omits `-N d_y log(sqrt(2 pi) sigma)`, and the prior omits
//! `-d_theta/2 log(2 pi v)`. Importance weights only ever consume log-target
//! differences, so these constants cancel.

use nalgebra::{DMatrix, DMatrixView, DVector, DVectorView, Dyn};
use rayon::prelude::*;

use super::{
    HiddenActivation, LayerBlock, Likelihood, NetworkSpec, OutputActivation, ParameterVector,
    TargetEvaluation,
};
use crate::error::{Error, Result};
use crate::math::{log_sum_exp, sigmoid, softplus};

fn weight_view<'a>(theta: &'a DVector<f64>, block: &LayerBlock) -> DMatrixView<'a, f64> {
    let (rows, cols) = block.weight_shape;
    let slice = &theta.as_slice()[block.weight_offset..block.weight_offset + rows * cols];
    DMatrixView::from_slice_generic(slice, Dyn(rows), Dyn(cols))
}

fn bias_view<'a>(theta: &'a DVector<f64>, block: &LayerBlock) -> DVectorView<'a, f64> {
    DVectorView::from_slice(
        &theta.as_slice()[block.bias_offset..block.bias_offset + block.bias_len],
        block.bias_len,
    )
}

fn add_bias_to_columns(z: &mut DMatrix<f64>, bias: DVectorView<'_, f64>) {
    for mut col in z.column_iter_mut() {
        col += bias;
    }
}

fn apply_hidden(z: &mut DMatrix<f64>, activation: HiddenActivation) {
    match activation {
        HiddenActivation::Tanh => z.apply(|v| *v = v.tanh()),
        // Derivative at exactly 0 is taken as 0 in the gradient pass.
        HiddenActivation::Relu => z.apply(|v| *v = v.max(0.0)),
    }
}

/// Columnwise softmax with entries kept strictly positive.
fn softmax_columns(logits: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = logits.clone();
    for mut col in out.column_iter_mut() {
        let max = col.max();
        col.apply(|v| *v = (*v - max).exp().max(1e-300));
        let sum = col.sum();
        col /= sum;
    }
    out
}

fn check_inputs(spec: &NetworkSpec, x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != spec.input_dim() {
        return Err(Error::config(format!(
            "input has {} rows, spec expects {}",
            x.nrows(),
            spec.input_dim()
        )));
    }
    Ok(())
}

fn check_outputs(spec: &NetworkSpec, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if y.nrows() != spec.output_dim() {
        return Err(Error::config(format!(
            "targets have {} rows, spec expects {}",
            y.nrows(),
            spec.output_dim()
        )));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::config(format!(
            "input batch has {} columns, target batch has {}",
            x.ncols(),
            y.ncols()
        )));
    }
    match spec.likelihood() {
        Likelihood::Bernoulli => {
            for (n, col) in y.column_iter().enumerate() {
                if col[0] != 0.0 && col[0] != 1.0 {
                    return Err(Error::data(format!(
                        "bernoulli target at sample {n} must be 0 or 1, got {}",
                        col[0]
                    )));
                }
            }
        }
        Likelihood::Multinomial => {
            for (n, col) in y.column_iter().enumerate() {
                let mut ones = 0;
                for &v in col.iter() {
                    if v == 1.0 {
                        ones += 1;
                    } else if v != 0.0 {
                        return Err(Error::data(format!(
                            "multinomial target at sample {n} must be one-hot, got entry {v}"
                        )));
                    }
                }
                if ones != 1 {
                    return Err(Error::data(format!(
                        "multinomial target at sample {n} must have exactly one 1, got {ones}"
                    )));
                }
            }
        }
        Likelihood::Gaussian { .. } => {
            if let Some(n) = y.column_iter().position(|c| c.iter().any(|v| !v.is_finite())) {
                return Err(Error::data(format!(
                    "gaussian target at sample {n} is not finite"
                )));
            }
        }
    }
    Ok(())
}

/// Forward pass keeping only the final pre-activation outputs.
fn logits_only(spec: &NetworkSpec, theta: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let blocks = spec.layout().blocks();
    let mut carried: Option<DMatrix<f64>> = None;
    for (i, block) in blocks.iter().enumerate() {
        let w = weight_view(theta, block);
        let mut z = match &carried {
            Some(a) => &w * a,
            None => &w * x,
        };
        add_bias_to_columns(&mut z, bias_view(theta, block));
        if i + 1 == blocks.len() {
            return z;
        }
        apply_hidden(&mut z, spec.hidden_activation());
        carried = Some(z);
    }
    unreachable!("spec guarantees at least one layer")
}

/// Forward pass retaining each layer's input, for back-propagation.
struct ForwardPass {
    /// `layer_inputs[l]` is the input to layer `l+1` (so `layer_inputs[0]`
    /// is the data batch itself).
    layer_inputs: Vec<DMatrix<f64>>,
    logits: DMatrix<f64>,
}

fn forward_pass(spec: &NetworkSpec, theta: &DVector<f64>, x: &DMatrix<f64>) -> ForwardPass {
    let blocks = spec.layout().blocks();
    let mut layer_inputs = Vec::with_capacity(blocks.len());
    let mut current = x.clone();
    for (i, block) in blocks.iter().enumerate() {
        let w = weight_view(theta, block);
        let mut z = &w * &current;
        add_bias_to_columns(&mut z, bias_view(theta, block));
        if i + 1 == blocks.len() {
            layer_inputs.push(current);
            return ForwardPass {
                layer_inputs,
                logits: z,
            };
        }
        apply_hidden(&mut z, spec.hidden_activation());
        layer_inputs.push(std::mem::replace(&mut current, z));
    }
    unreachable!("spec guarantees at least one layer")
}

/// Pre-activation outputs of the last layer for a batch of inputs (columns).
pub fn forward_logits(
    spec: &NetworkSpec,
    theta: &ParameterVector,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    spec.check_theta(theta)?;
    check_inputs(spec, x)?;
    Ok(logits_only(spec, theta, x))
}

/// Applies the output activation implied by the likelihood to a logit batch.
pub(crate) fn apply_output_activation(spec: &NetworkSpec, logits: &DMatrix<f64>) -> DMatrix<f64> {
    match spec.output_activation() {
        OutputActivation::Identity => logits.clone(),
        OutputActivation::Sigmoid => logits.map(sigmoid),
        OutputActivation::Softmax => softmax_columns(logits),
    }
}

/// Evaluates the network on a single input: `Phi(theta, x)`.
///
/// Sigmoid outputs lie in the open interval (0, 1); softmax outputs are
/// positive and sum to one.
pub fn forward(
    spec: &NetworkSpec,
    theta: &ParameterVector,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let batch = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    let out = forward_batch(spec, theta, &batch)?;
    Ok(out.column(0).into_owned())
}

/// Evaluates the network on a batch of inputs (one column per sample).
pub fn forward_batch(
    spec: &NetworkSpec,
    theta: &ParameterVector,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let logits = forward_logits(spec, theta, x)?;
    Ok(apply_output_activation(spec, &logits))
}

/// Log-likelihood from logits; errors carry the index of the first sample
/// with a non-finite network output.
fn likelihood_from_logits(
    spec: &NetworkSpec,
    logits: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<f64> {
    if let Some(n) = logits
        .column_iter()
        .position(|c| c.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::numerical(format!(
            "non-finite network output at sample {n}"
        )));
    }
    let value = match spec.likelihood() {
        Likelihood::Gaussian { sigma } => {
            let mut sq = 0.0;
            for (z, t) in logits.column_iter().zip(y.column_iter()) {
                sq += (z - t).norm_squared();
            }
            -sq / (2.0 * sigma * sigma)
        }
        Likelihood::Bernoulli => {
            let mut acc = 0.0;
            for (z, t) in logits.column_iter().zip(y.column_iter()) {
                acc += t[0] * z[0] - softplus(z[0]);
            }
            acc
        }
        Likelihood::Multinomial => {
            let mut acc = 0.0;
            for (z, t) in logits.column_iter().zip(y.column_iter()) {
                let lse = log_sum_exp(z.as_slice());
                for (zc, tc) in z.iter().zip(t.iter()) {
                    if *tc == 1.0 {
                        acc += zc - lse;
                    }
                }
            }
            acc
        }
    };
    Ok(value)
}

/// `sum_n log p(y_n | Phi(theta, x_n))` over the batch.
///
/// Additive constants are dropped (see the module docs); the Gaussian case
/// therefore returns exactly `-sum_n ||Phi(theta, x_n) - y_n||^2 / (2 sigma^2)`.
pub fn log_likelihood(
    spec: &NetworkSpec,
    theta: &ParameterVector,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<f64> {
    spec.check_theta(theta)?;
    check_inputs(spec, x)?;
    check_outputs(spec, x, y)?;
    likelihood_from_logits(spec, &logits_only(spec, theta, x), y)
}

/// `-||theta||^2 / (2 v)` for the i.i.d. zero-mean Gaussian prior with
/// per-entry variance `v` (normalization constant dropped).
pub fn log_prior(spec: &NetworkSpec, theta: &ParameterVector) -> Result<f64> {
    spec.check_theta(theta)?;
    Ok(-theta.norm_squared() / (2.0 * spec.prior_variance()))
}

/// Unnormalized log-target `log pi = log p(theta) + log l(Y | theta, X)`,
/// value only.
pub fn log_target(
    spec: &NetworkSpec,
    theta: &ParameterVector,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<TargetEvaluation> {
    let value = log_likelihood(spec, theta, x, y)? + log_prior(spec, theta)?;
    Ok(TargetEvaluation {
        log_target: value,
        gradient: None,
    })
}

/// Log-target with the prior term scaled by `prior_weight`.
///
/// With the training set partitioned into batches `b` of size `n_b`, the
/// per-batch targets `log pi_b` use `prior_weight = n_b / N`, which makes
/// `sum_b log pi_b(theta) = log pi(theta)` exactly.
pub fn log_target_weighted_prior(
    spec: &NetworkSpec,
    theta: &ParameterVector,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    prior_weight: f64,
) -> Result<f64> {
    Ok(log_likelihood(spec, theta, x, y)? + prior_weight * log_prior(spec, theta)?)
}

fn gradient_impl(
    spec: &NetworkSpec,
    theta: &ParameterVector,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    prior_weight: f64,
) -> Result<(f64, DVector<f64>)> {
    let pass = forward_pass(spec, theta, x);
    let lik = likelihood_from_logits(spec, &pass.logits, y)?;

    let mut grad = DVector::zeros(spec.param_count());
    // d(log lik)/d(logits); the canonical likelihood/output-activation
    // pairings all reduce to a residual.
    let mut delta: DMatrix<f64> = match spec.likelihood() {
        Likelihood::Gaussian { sigma } => (y - &pass.logits) / (sigma * sigma),
        Likelihood::Bernoulli => {
            let mut d = pass.logits.map(sigmoid);
            d.zip_apply(y, |p, t| *p = t - *p);
            d
        }
        Likelihood::Multinomial => {
            let mut d = softmax_columns(&pass.logits);
            d.zip_apply(y, |p, t| *p = t - *p);
            d
        }
    };

    let blocks = spec.layout().blocks();
    for (i, block) in blocks.iter().enumerate().rev() {
        let a_prev = &pass.layer_inputs[i];
        let gw = &delta * a_prev.transpose();
        grad.as_mut_slice()
            [block.weight_offset..block.weight_offset + gw.len()]
            .copy_from_slice(gw.as_slice());
        for (r, g) in grad.as_mut_slice()
            [block.bias_offset..block.bias_offset + block.bias_len]
            .iter_mut()
            .enumerate()
        {
            *g = delta.row(r).sum();
        }
        if i > 0 {
            let w = weight_view(theta, block);
            let mut back = w.transpose() * &delta;
            match spec.hidden_activation() {
                HiddenActivation::Tanh => back.zip_apply(a_prev, |b, a| *b *= 1.0 - a * a),
                HiddenActivation::Relu => back.zip_apply(a_prev, |b, a| {
                    if a <= 0.0 {
                        *b = 0.0;
                    }
                }),
            }
            delta = back;
        }
    }

    let v = spec.prior_variance();
    let prior = -prior_weight * theta.norm_squared() / (2.0 * v);
    grad.axpy(-prior_weight / v, theta, 1.0);

    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numerical("non-finite gradient of log-target"));
    }
    Ok((lik + prior, grad))
}

/// Unnormalized log-target and its gradient, by reverse-mode accumulation
/// over the layers.
pub fn log_target_gradient(
    spec: &NetworkSpec,
    theta: &ParameterVector,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<TargetEvaluation> {
    log_target_gradient_weighted_prior(spec, theta, x, y, 1.0)
}

/// Gradient variant of [`log_target_weighted_prior`].
pub fn log_target_gradient_weighted_prior(
    spec: &NetworkSpec,
    theta: &ParameterVector,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    prior_weight: f64,
) -> Result<TargetEvaluation> {
    spec.check_theta(theta)?;
    check_inputs(spec, x)?;
    check_outputs(spec, x, y)?;
    let (value, grad) = gradient_impl(spec, theta, x, y, prior_weight)?;
    Ok(TargetEvaluation {
        log_target: value,
        gradient: Some(grad),
    })
}

/// `log_target` for a whole population, evaluated in parallel. Results are
/// ordered as the input; errors carry the population index.
pub fn batched_log_target(
    spec: &NetworkSpec,
    thetas: &[ParameterVector],
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    check_inputs(spec, x)?;
    check_outputs(spec, x, y)?;
    thetas
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            log_target(spec, theta, x, y)
                .map(|e| e.log_target)
                .map_err(|e| Error::numerical(format!("population member {i}: {e}")))
        })
        .collect()
}
