//! Energy-hub park simulator: device models, market balancing, rewards and
//! Lagrange-multiplier bookkeeping for the storage capacity constraints.

mod action;
mod devices;
mod lagrange;
mod market;
mod params;
mod series;
mod sim;

use thiserror::Error;

pub use action::{decode_action, DeviceKind, HubAction, JointAction};
pub use devices::{boiler_output, chp_output, storage_step};
pub use lagrange::{clip01, penalized_reward, update_lagrange};
pub use market::{balance_market, park_reward, HubFlows, MarketOutcome};
pub use params::{HubParams, MarketParams};
pub use series::{ExoSlot, ExogenousSeries};
pub use sim::{
    agent_kind, time_features, CapacityMode, Dispatch, HubState, ParkEnv, ParkState, StepOutcome,
    AGENTS_PER_HUB, OBS_DIM, OBS_LAYOUT, OBS_LAYOUT_TAG,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{kind} action index {index} out of range 0..{count}")]
    ActionOutOfRange {
        kind: DeviceKind,
        index: usize,
        count: usize,
    },
    #[error("a storage cannot charge and discharge in the same slot")]
    SimultaneousChargeDischarge,
    #[error("storage flows must be non-negative")]
    NegativeFlow,
    #[error("episode exhausted: slot {t} is past the horizon {horizon}")]
    EpisodeExhausted { t: usize, horizon: usize },
    #[error("agent {agent} out of range 0..{count}")]
    AgentOutOfRange { agent: usize, count: usize },
    #[error("invalid series{}: {reason}", .row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    InvalidSeries { row: Option<usize>, reason: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}
