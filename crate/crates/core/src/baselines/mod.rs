//! Comparison ladder: critic ablations trained with the shared learner, the
//! full-information oracle, and the cross-method ranking.

mod compare;
mod oracle;

use thiserror::Error;

use crate::data::DataError;
use crate::env::{EnvError, ParkEnv};
use crate::marl::{train, CriticKind, EpisodeMetrics, MarlError, TrainConfig, TrainOutput};
use crate::scalar::Scalar;

pub use compare::{
    compare, improvement_pct, median, oracle_gap_pct, Comparison, RankedAlgo, RunSummary, ORACLE_ALGO,
};
pub use oracle::{dp_oracle, enumerate_oracle, solve_oracle, OracleConfig, OracleMode, OracleSolution};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Marl(#[from] MarlError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("oracle refused: about {estimate:.3e} evaluations needed, budget is {budget:.3e}")]
    OverBudget { estimate: f64, budget: f64 },
    #[error("invalid oracle setup: {0}")]
    InvalidOracle(String),
    #[error("incomparable reports: {0}")]
    Incomparable(String),
    #[error("report line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// Learner variants; all share the actor update and differ in the critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    /// Attention critic.
    Proposed,
    /// One critic per agent over its own observation and action.
    Independent,
    /// One critic per agent over all observations and actions, no attention.
    Concat,
    /// Attention critic with every weight fixed to `1/(N-1)`.
    Uniform,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::Proposed,
        BaselineKind::Independent,
        BaselineKind::Concat,
        BaselineKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Proposed => "proposed",
            BaselineKind::Independent => "independent",
            BaselineKind::Concat => "concat",
            BaselineKind::Uniform => "uniform",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn critic(self) -> CriticKind {
        match self {
            BaselineKind::Proposed => CriticKind::Attention,
            BaselineKind::Independent => CriticKind::Local,
            BaselineKind::Concat => CriticKind::Concat,
            BaselineKind::Uniform => CriticKind::UniformAttention,
        }
    }

    pub fn from_critic(kind: CriticKind) -> Self {
        match kind {
            CriticKind::Attention => BaselineKind::Proposed,
            CriticKind::Local => BaselineKind::Independent,
            CriticKind::Concat => BaselineKind::Concat,
            CriticKind::UniformAttention => BaselineKind::Uniform,
        }
    }
}

/// Trains the `kind` variant; `cfg.critic` is overridden.
pub fn run_baseline<S: Scalar>(
    kind: BaselineKind,
    env: ParkEnv<S>,
    cfg: TrainConfig<S>,
    sink: impl FnMut(&EpisodeMetrics<S>),
) -> Result<TrainOutput<S>, MarlError> {
    train(
        env,
        TrainConfig {
            critic: kind.critic(),
            ..cfg
        },
        sink,
    )
}
