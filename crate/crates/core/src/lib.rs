//! Multi-energy industrial park simulation and decentralized multi-agent
//! soft actor-critic training with an attention critic.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pin the `f64` instantiations used by the CLI.

pub mod approx;
pub mod baselines;
pub mod cli;
pub mod data;
pub mod env;
pub mod marl;
pub mod scalar;

pub use scalar::Scalar;

pub type ParkEnv = env::ParkEnv<f64>;
pub type ParkState = env::ParkState<f64>;
pub type HubParams = env::HubParams<f64>;
pub type MarketParams = env::MarketParams<f64>;
pub type ExogenousSeries = env::ExogenousSeries<f64>;
pub type StepOutcome = env::StepOutcome<f64>;
pub type Mlp = approx::Mlp<f64>;
pub type AttentionParams = approx::AttentionParams<f64>;
pub type Trainer = marl::Trainer<f64>;
pub type TrainConfig = marl::TrainConfig<f64>;
pub type Checkpoint = marl::Checkpoint<f64>;

pub type ParkEnv32 = env::ParkEnv<f32>;
pub type Mlp32 = approx::Mlp<f32>;
pub type Trainer32 = marl::Trainer<f32>;
