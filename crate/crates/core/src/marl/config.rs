//! Training hyperparameters and their `key = value` text form.

use std::fmt::Write as _;

use crate::scalar::{lit, Scalar};

use super::MarlError;

/// Which centralized critic the learner uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriticKind {
    /// Multi-head attention over the other agents' encodings.
    Attention,
    /// Attention pipeline with every weight frozen at `1/(N-1)`.
    UniformAttention,
    /// One critic per agent over the concatenated global observations and actions.
    Concat,
    /// One critic per agent over its own observation only.
    Local,
}

impl CriticKind {
    pub const ALL: [CriticKind; 4] = [
        CriticKind::Attention,
        CriticKind::UniformAttention,
        CriticKind::Concat,
        CriticKind::Local,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CriticKind::Attention => "attention",
            CriticKind::UniformAttention => "uniform-attention",
            CriticKind::Concat => "concat",
            CriticKind::Local => "local",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// How the actor's policy-gradient expectation over its own action is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActorEstimator {
    /// Score-function estimate from one freshly sampled action.
    Sampled,
    /// Exact expectation over the agent's discrete action set.
    Expected,
}

impl ActorEstimator {
    pub fn name(self) -> &'static str {
        match self {
            ActorEstimator::Sampled => "sampled",
            ActorEstimator::Expected => "expected",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "sampled" => Some(ActorEstimator::Sampled),
            "expected" => Some(ActorEstimator::Expected),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<S: Scalar = f64> {
    pub gamma: S,
    /// Entropy coefficient.
    pub entropy: S,
    pub heads: usize,
    pub batch: usize,
    pub buffer: usize,
    pub tau: S,
    pub critic_lr: S,
    pub actor_lr: S,
    pub episodes: usize,
    pub seed: u64,
    /// Transitions collected before the first update.
    pub warmup: usize,
    /// Environment slots between updates.
    pub update_every: usize,
    /// Rewards are multiplied by this inside the learner only.
    pub reward_scale: S,
    /// Width of critic encoders and heads.
    pub critic_hidden: usize,
    pub actor_hidden: usize,
    pub leaky_slope: S,
    pub critic_max_grad_norm: Option<S>,
    pub actor_max_grad_norm: Option<S>,
    pub critic: CriticKind,
    pub estimator: ActorEstimator,
}

impl<S: Scalar> Default for TrainConfig<S> {
    fn default() -> Self {
        Self {
            gamma: lit(0.95),
            entropy: lit(0.01),
            heads: 4,
            batch: 32,
            buffer: 1000,
            tau: lit(0.01),
            critic_lr: lit(1e-3),
            actor_lr: lit(3e-4),
            episodes: 100,
            seed: 0,
            warmup: 100,
            update_every: 1,
            reward_scale: lit(1e-3),
            critic_hidden: 128,
            actor_hidden: 64,
            leaky_slope: lit(0.01),
            critic_max_grad_norm: Some(lit(10.0)),
            actor_max_grad_norm: Some(lit(10.0)),
            critic: CriticKind::Attention,
            estimator: ActorEstimator::Sampled,
        }
    }
}

fn bad(key: &str, value: &str) -> MarlError {
    MarlError::InvalidConfig(format!("bad value {value:?} for {key}"))
}

fn num<S: Scalar>(key: &str, value: &str) -> Result<S, MarlError> {
    S::parse_str(value).ok_or_else(|| bad(key, value))
}

fn int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, MarlError> {
    value.parse().map_err(|_| bad(key, value))
}

fn norm<S: Scalar>(key: &str, value: &str) -> Result<Option<S>, MarlError> {
    if value == "none" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

fn show_norm<S: Scalar>(v: Option<S>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl<S: Scalar> TrainConfig<S> {
    pub fn validate(&self) -> Result<(), MarlError> {
        let zero = S::zero();
        let one = S::one();
        let mut problems = Vec::new();
        if !(self.gamma > zero && self.gamma < one) && self.gamma != zero {
            problems.push("gamma must lie in [0, 1)");
        }
        if !(self.entropy >= zero) {
            problems.push("entropy must be >= 0");
        }
        if !(self.tau > zero && self.tau <= one) {
            problems.push("tau must lie in (0, 1]");
        }
        if self.heads == 0 || self.critic_hidden % self.heads != 0 {
            problems.push("heads must be >= 1 and divide critic_hidden");
        }
        if self.batch == 0 || self.buffer < self.batch {
            problems.push("batch must be >= 1 and no larger than buffer");
        }
        if self.update_every == 0 {
            problems.push("update_every must be >= 1");
        }
        if self.critic_hidden == 0 || self.actor_hidden == 0 {
            problems.push("hidden sizes must be >= 1");
        }
        if !(self.critic_lr > zero && self.actor_lr > zero && self.reward_scale > zero) {
            problems.push("learning rates and reward_scale must be > 0");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(MarlError::InvalidConfig(problems.join("; ")))
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), MarlError> {
        match key {
            "gamma" => self.gamma = num(key, value)?,
            "entropy" => self.entropy = num(key, value)?,
            "heads" => self.heads = int(key, value)?,
            "batch" => self.batch = int(key, value)?,
            "buffer" => self.buffer = int(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "critic_lr" => self.critic_lr = num(key, value)?,
            "actor_lr" => self.actor_lr = num(key, value)?,
            "episodes" => self.episodes = int(key, value)?,
            "seed" => self.seed = int(key, value)?,
            "warmup" => self.warmup = int(key, value)?,
            "update_every" => self.update_every = int(key, value)?,
            "reward_scale" => self.reward_scale = num(key, value)?,
            "critic_hidden" => self.critic_hidden = int(key, value)?,
            "actor_hidden" => self.actor_hidden = int(key, value)?,
            "leaky_slope" => self.leaky_slope = num(key, value)?,
            "critic_max_grad_norm" => self.critic_max_grad_norm = norm(key, value)?,
            "actor_max_grad_norm" => self.actor_max_grad_norm = norm(key, value)?,
            "critic" => self.critic = CriticKind::from_name(value).ok_or_else(|| bad(key, value))?,
            "estimator" => self.estimator = ActorEstimator::from_name(value).ok_or_else(|| bad(key, value))?,
            _ => return Err(MarlError::InvalidConfig(format!("unknown training key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are skipped.
    pub fn parse(text: &str) -> Result<Self, MarlError> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| MarlError::InvalidConfig(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every setting as `key = value` lines, readable by [`TrainConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let pairs: [(&str, String); 20] = [
            ("gamma", self.gamma.to_string()),
            ("entropy", self.entropy.to_string()),
            ("heads", self.heads.to_string()),
            ("batch", self.batch.to_string()),
            ("buffer", self.buffer.to_string()),
            ("tau", self.tau.to_string()),
            ("critic_lr", self.critic_lr.to_string()),
            ("actor_lr", self.actor_lr.to_string()),
            ("episodes", self.episodes.to_string()),
            ("seed", self.seed.to_string()),
            ("warmup", self.warmup.to_string()),
            ("update_every", self.update_every.to_string()),
            ("reward_scale", self.reward_scale.to_string()),
            ("critic_hidden", self.critic_hidden.to_string()),
            ("actor_hidden", self.actor_hidden.to_string()),
            ("leaky_slope", self.leaky_slope.to_string()),
            ("critic_max_grad_norm", show_norm(self.critic_max_grad_norm)),
            ("actor_max_grad_norm", show_norm(self.actor_max_grad_norm)),
            ("critic", self.critic.name().to_string()),
            ("estimator", self.estimator.name().to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Attention key/value width per head.
    pub fn head_dim(&self) -> usize {
        self.critic_hidden / self.heads
    }
}
