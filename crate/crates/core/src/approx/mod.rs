//! Differentiable building blocks: MLPs, bilinear multi-head attention,
//! categorical policies and gradient-descent optimizers, all with exact
//! hand-written backward passes.

mod attention;
mod mlp;
mod optim;
mod params;
mod policy;

use thiserror::Error;

pub use attention::{
    attention_contribution, attention_weights, softmax, AttentionCache, AttentionHead, AttentionParams,
    WeightMode,
};
pub use mlp::{Activation, Dense, Mlp, MlpCache};
pub use optim::{optimizer_step, OptimizerKind, OptimizerState};
pub use params::{soft_update, Parameters, TensorRef};
pub use policy::{
    argmax, categorical_policy, entropy, log_prob_logit_grad, log_softmax, policy_forward, probabilities,
    sample_index, PolicyBatch,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cache does not belong to this forward pass")]
    StaleCache,
    #[error("training diverged: {0}")]
    Divergence(String),
}
