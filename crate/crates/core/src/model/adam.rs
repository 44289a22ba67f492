//! Adam point estimation (MLE or MAP), used to initialize the sampler.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::target::{log_target_gradient_weighted_prior, log_target_weighted_prior};
use super::{NetworkSpec, ParameterVector};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamDomain};

/// Which objective the point estimate maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointEstimateMode {
    /// Maximize the log-likelihood alone.
    Mle,
    /// Maximize log-likelihood plus log-prior.
    Map,
}

/// Adam hyperparameters. `minibatch_size = 0` means full-batch steps.
#[derive(Debug, Clone)]
pub struct AdamSettings {
    pub steps: usize,
    pub step_size: f64,
    pub minibatch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        AdamSettings {
            steps: 200,
            step_size: 1e-2,
            minibatch_size: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Maximizes the MLE/MAP objective with Adam and returns the iterate with the
/// best full-data objective among the evaluated checkpoints (every step in
/// full-batch mode; epoch boundaries and the final step when mini-batching).
/// Deterministic given the seed.
pub fn adam_point_estimate(
    spec: &NetworkSpec,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    mode: PointEstimateMode,
    settings: &AdamSettings,
    seed: u64,
) -> Result<ParameterVector> {
    if settings.steps == 0 {
        return Err(Error::config("adam_point_estimate requires steps >= 1"));
    }
    let n = x.ncols();
    if n == 0 {
        return Err(Error::config("adam_point_estimate requires a nonempty batch"));
    }
    let prior_weight = match mode {
        PointEstimateMode::Mle => 0.0,
        PointEstimateMode::Map => 1.0,
    };

    let mut theta = init_parameters(spec, seed);
    let d = spec.param_count();
    let mut m: DVector<f64> = DVector::zeros(d);
    let mut v: DVector<f64> = DVector::zeros(d);

    let full_batch = settings.minibatch_size == 0 || settings.minibatch_size >= n;
    let batch_size = if full_batch { n } else { settings.minibatch_size };
    let batches_per_epoch = n.div_ceil(batch_size);

    let mut order: Vec<usize> = (0..n).collect();
    let mut best_obj = f64::NEG_INFINITY;
    let mut best_theta = theta.clone();

    for step in 0..settings.steps {
        let within_epoch = step % batches_per_epoch;
        let (xb, yb, frac) = if full_batch {
            (x.clone(), y.clone(), 1.0)
        } else {
            if within_epoch == 0 {
                let epoch = step / batches_per_epoch;
                let mut rng = stream_rng(seed, StreamDomain::AdamInit, 1, epoch as u64);
                order.shuffle(&mut rng);
            }
            let start = within_epoch * batch_size;
            let end = (start + batch_size).min(n);
            let idx = &order[start..end];
            let xb = DMatrix::from_fn(x.nrows(), idx.len(), |r, c| x[(r, idx[c])]);
            let yb = DMatrix::from_fn(y.nrows(), idx.len(), |r, c| y[(r, idx[c])]);
            (xb, yb, idx.len() as f64 / n as f64)
        };

        let eval =
            log_target_gradient_weighted_prior(spec, &theta, &xb, &yb, prior_weight * frac)?;
        let grad = eval.gradient.expect("gradient requested");
        if !eval.log_target.is_finite() {
            return Err(Error::numerical(format!(
                "adam objective diverged at step {step}"
            )));
        }

        // Track the best iterate on the full objective. In full-batch mode the
        // step objective is the full objective; otherwise check epoch ends.
        let checkpoint = full_batch
            || within_epoch == batches_per_epoch - 1
            || step == settings.steps - 1;
        if checkpoint {
            let obj = if full_batch {
                eval.log_target
            } else {
                log_target_weighted_prior(spec, &theta, x, y, prior_weight)?
            };
            if obj > best_obj {
                best_obj = obj;
                best_theta.copy_from(&theta);
            }
        }

        let t = (step + 1) as f64;
        let bc1 = 1.0 - settings.beta1.powf(t);
        let bc2 = 1.0 - settings.beta2.powf(t);
        for i in 0..d {
            m[i] = settings.beta1 * m[i] + (1.0 - settings.beta1) * grad[i];
            v[i] = settings.beta2 * v[i] + (1.0 - settings.beta2) * grad[i] * grad[i];
            let m_hat: f64 = m[i] / bc1;
            let v_hat: f64 = v[i] / bc2;
            // Ascent step: the objective is maximized.
            theta[i] += settings.step_size * m_hat / (v_hat.sqrt() + settings.epsilon);
        }
    }

    // The final iterate may beat the last checkpoint.
    let final_obj = log_target_weighted_prior(spec, &theta, x, y, prior_weight)?;
    if final_obj.is_finite() && final_obj > best_obj {
        best_theta.copy_from(&theta);
    }
    Ok(best_theta)
}

/// Xavier-style normal initialization: weight entries with variance
/// `2 / (fan_in + fan_out)`, biases zero.
fn init_parameters(spec: &NetworkSpec, seed: u64) -> ParameterVector {
    let mut rng = stream_rng(seed, StreamDomain::AdamInit, 0, 0);
    let mut theta = DVector::zeros(spec.param_count());
    for block in spec.layout().blocks() {
        let (rows, cols) = block.weight_shape;
        let std = (2.0 / (rows + cols) as f64).sqrt();
        for i in block.weight_offset..block.weight_offset + rows * cols {
            let z: f64 = StandardNormal.sample(&mut rng);
            theta[i] = std * z;
        }
    }
    theta
}
