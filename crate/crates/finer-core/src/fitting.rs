//! Configuration shared by the fitting pipelines: network shape and
//! optimizer/loop settings.

use crate::encoding::PositionalEncoder;
use crate::error::Result;
use crate::init::InitScheme;
use crate::net::Mlp;
use crate::optim::{AdamState, Loss, TrainConfig};

/// Hidden stack plus optional positional-encoding front end.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: crate::activation::Activation,
    pub encoder: Option<PositionalEncoder>,
}

impl NetworkSpec {
    pub fn dims(&self, raw_input_dim: usize, output_dim: usize) -> Vec<usize> {
        let d_in = match &self.encoder {
            Some(pe) => pe.output_dim(raw_input_dim),
            None => raw_input_dim,
        };
        let mut dims = vec![d_in];
        dims.extend(std::iter::repeat(self.hidden_width).take(self.hidden_layers));
        dims.push(output_dim);
        dims
    }

    pub fn build(
        &self,
        raw_input_dim: usize,
        output_dim: usize,
        scheme: &InitScheme,
    ) -> Result<Mlp> {
        Mlp::init(&self.dims(raw_input_dim, output_dim), self.activation, scheme)
    }
}

/// Optimizer hyperparameters and loop budget.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub iterations: usize,
    pub loss: Loss,
    pub cosine_decay: bool,
    /// Overrides the task's batch policy when set.
    pub batch_override: Option<usize>,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            iterations: 2000,
            loss: Loss::L2,
            cosine_decay: false,
            batch_override: None,
        }
    }
}

impl TrainSettings {
    pub fn adam_state(&self, mlp: &Mlp) -> Result<AdamState> {
        AdamState::with_hyperparams(mlp, self.lr, self.beta1, self.beta2, self.eps)
    }

    pub fn train_config(&self, log_psnr: bool) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            loss: self.loss,
            log_psnr,
            cosine_decay: self.cosine_decay,
        }
    }
}
