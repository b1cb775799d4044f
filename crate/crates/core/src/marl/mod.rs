//! Centralized training with decentralized execution: replay, attention
//! critics, counterfactual soft actor-critic losses, target networks, the
//! training loop, checkpoints and evaluation.

mod actor;
mod buffer;
mod checkpoint;
mod config;
mod critic;
mod evaluate;
mod losses;
mod train;

use thiserror::Error;

use crate::approx::ApproxError;
use crate::env::EnvError;

pub use actor::{Actor, ActorSet, ExecutionMode};
pub use buffer::{Minibatch, ObsScaler, ReplayBuffer, Transition};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{ActorEstimator, CriticKind, TrainConfig};
pub use critic::{counterfactual_baseline, with_one_hot, AttentionCritic, Critic, CriticCache};
pub use evaluate::{evaluate, rollout, rollout_actors, DispatchRow, EvalOptions, EvalReport, HubDispatch};
pub use losses::{
    actor_gradient, actor_gradient_for, actor_losses, advantages, critic_loss, critic_loss_against, critic_targets,
    draw_actor_sample, score_weights, ActorGradient, ActorSample, CriticLoss,
};
pub use train::{metrics_csv, metrics_header, train, EpisodeMetrics, TrainOutput, Trainer};

#[derive(Debug, Error)]
pub enum MarlError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),
    #[error("malformed checkpoint at line {line}: {reason}")]
    CheckpointFormat { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
