//! The probabilistic model: a fully-connected network, its likelihood, the
//! Gaussian prior over all weights and biases, and the resulting unnormalized
//! log-target.
//!
//! A network with layer sizes `S_0..S_L` applies, per layer,
//! `x_l = R_l(W_l x_{l-1} + b_l)`. All weight matrices and bias vectors are
//! flattened into a single parameter vector of length
//! `d_theta = sum_l S_l (S_{l-1} + 1)`, the quantity Bayesian inference runs
//! over. The output activation is implied by the likelihood: identity for the
//! Gaussian case, sigmoid for Bernoulli, softmax for multinomial.

mod adam;
mod target;

pub use adam::{adam_point_estimate, AdamSettings, PointEstimateMode};
pub use target::{
    batched_log_target, forward, forward_logits, log_likelihood, log_prior, log_target,
    log_target_gradient, log_target_gradient_weighted_prior, log_target_weighted_prior,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat vector holding every weight and bias of a network, in the block order
/// described by [`ParameterLayout`].
pub type ParameterVector = DVector<f64>;

/// Activation applied to hidden layers 1..L-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HiddenActivation {
    Tanh,
    Relu,
}

/// Output activation, implied by the likelihood kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Identity,
    Sigmoid,
    Softmax,
}

/// Observation model tying network outputs to targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Likelihood {
    /// `y ~ N(x_L, sigma^2)`; identity output. The log-likelihood drops the
    /// additive normalization constant and keeps only
    /// `-||x_L - y||^2 / (2 sigma^2)`.
    Gaussian { sigma: f64 },
    /// `y ~ Ber(x_L)` with a sigmoid output unit; `y` in {0, 1}.
    Bernoulli,
    /// One-hot `y ~ Mult(x_L)` with a softmax output layer.
    Multinomial,
}

/// Value (and optionally gradient) of the unnormalized log-target
/// `log pi(theta) = log p(theta) + log l(Y | theta, X)`.
#[derive(Debug, Clone)]
pub struct TargetEvaluation {
    pub log_target: f64,
    pub gradient: Option<DVector<f64>>,
}

/// Placement of one layer's weight and bias blocks inside the flat vector.
///
/// Weight blocks are stored column-major (nalgebra's native order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerBlock {
    /// 1-based layer index.
    pub layer: usize,
    pub weight_offset: usize,
    /// Weight shape: (S_l, S_{l-1}).
    pub weight_shape: (usize, usize),
    pub bias_offset: usize,
    pub bias_len: usize,
}

/// Map from the flat parameter vector to per-layer matrices. Blocks tile
/// `[0, d_theta)` without gaps or overlap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterLayout {
    blocks: Vec<LayerBlock>,
    total: usize,
}

impl ParameterLayout {
    fn new(layer_sizes: &[usize]) -> Self {
        let mut blocks = Vec::with_capacity(layer_sizes.len() - 1);
        let mut offset = 0;
        for l in 1..layer_sizes.len() {
            let rows = layer_sizes[l];
            let cols = layer_sizes[l - 1];
            let weight_offset = offset;
            offset += rows * cols;
            let bias_offset = offset;
            offset += rows;
            blocks.push(LayerBlock {
                layer: l,
                weight_offset,
                weight_shape: (rows, cols),
                bias_offset,
                bias_len: rows,
            });
        }
        ParameterLayout {
            blocks,
            total: offset,
        }
    }

    pub fn blocks(&self) -> &[LayerBlock] {
        &self.blocks
    }

    /// Total parameter count `d_theta`.
    pub fn total(&self) -> usize {
        self.total
    }
}

/// Architecture plus probabilistic structure: defines the map `Phi` and the
/// unnormalized target `pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    layer_sizes: Vec<usize>,
    hidden_activation: HiddenActivation,
    likelihood: Likelihood,
    prior_variance: f64,
    layout: ParameterLayout,
}

impl NetworkSpec {
    /// Validates the architecture/likelihood pairing and fixes the parameter
    /// layout.
    ///
    /// Requirements: at least one layer; every size positive; Bernoulli needs
    /// a single output unit, multinomial at least two, and a Gaussian
    /// likelihood a positive `sigma`; `prior_variance` must be positive.
    pub fn new(
        layer_sizes: Vec<usize>,
        hidden_activation: HiddenActivation,
        likelihood: Likelihood,
        prior_variance: f64,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::config(
                "network needs at least one layer (two entries in layer_sizes)",
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::config("layer sizes must be positive"));
        }
        let out = *layer_sizes.last().unwrap();
        match likelihood {
            Likelihood::Bernoulli if out != 1 => {
                return Err(Error::config(format!(
                    "bernoulli likelihood requires a single output unit, got {out}"
                )));
            }
            Likelihood::Multinomial if out < 2 => {
                return Err(Error::config(
                    "multinomial likelihood requires at least two output units",
                ));
            }
            Likelihood::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                return Err(Error::config("gaussian likelihood requires sigma > 0"));
            }
            _ => {}
        }
        if !(prior_variance > 0.0 && prior_variance.is_finite()) {
            return Err(Error::config("prior_variance must be positive and finite"));
        }
        let layout = ParameterLayout::new(&layer_sizes);
        Ok(NetworkSpec {
            layer_sizes,
            hidden_activation,
            likelihood,
            prior_variance,
            layout,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn hidden_activation(&self) -> HiddenActivation {
        self.hidden_activation
    }

    pub fn likelihood(&self) -> Likelihood {
        self.likelihood
    }

    pub fn output_activation(&self) -> OutputActivation {
        match self.likelihood {
            Likelihood::Gaussian { .. } => OutputActivation::Identity,
            Likelihood::Bernoulli => OutputActivation::Sigmoid,
            Likelihood::Multinomial => OutputActivation::Softmax,
        }
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }

    /// Returns a copy of this spec with a different prior variance (used by
    /// the prior-variance search).
    pub fn with_prior_variance(&self, prior_variance: f64) -> Result<Self> {
        NetworkSpec::new(
            self.layer_sizes.clone(),
            self.hidden_activation,
            self.likelihood,
            prior_variance,
        )
    }

    pub fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    /// Total parameter count `d_theta = sum_l S_l (S_{l-1} + 1)`.
    pub fn param_count(&self) -> usize {
        self.layout.total()
    }

    /// All-zero parameter vector of the right length.
    pub fn zero_parameters(&self) -> ParameterVector {
        DVector::zeros(self.param_count())
    }

    pub(crate) fn check_theta(&self, theta: &ParameterVector) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::config(format!(
                "parameter vector has length {}, spec requires {}",
                theta.len(),
                self.param_count()
            )));
        }
        Ok(())
    }
}
