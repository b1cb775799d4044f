//! Experience replay and minibatch assembly.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{ExogenousSeries, OBS_DIM, OBS_LAYOUT};
use crate::scalar::Scalar;

use super::MarlError;

/// One joint step of the park as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S: Scalar = f64> {
    pub obs: Vec<Vec<S>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<S>,
    pub next_obs: Vec<Vec<S>>,
    pub terminal: bool,
    pub t: usize,
}

impl<S: Scalar> Transition<S> {
    pub fn agent_count(&self) -> usize {
        self.actions.len()
    }

    pub fn validate(&self) -> Result<(), MarlError> {
        let n = self.actions.len();
        if self.obs.len() != n || self.rewards.len() != n || self.next_obs.len() != n {
            return Err(MarlError::Shape(format!(
                "transition fields disagree on agent count: obs {}, actions {n}, rewards {}, next {}",
                self.obs.len(),
                self.rewards.len(),
                self.next_obs.len()
            )));
        }
        Ok(())
    }
}

/// Fixed-capacity ring of transitions with a seeded uniform sampler.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<S: Scalar = f64> {
    capacity: usize,
    items: Vec<Transition<S>>,
    next: usize,
    rng: ChaCha8Rng,
}

impl<S: Scalar> ReplayBuffer<S> {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity),
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Stores `tr`, overwriting the oldest entry once full.
    pub fn push(&mut self, tr: Transition<S>) -> Result<(), MarlError> {
        tr.validate()?;
        if let Some(first) = self.items.first() {
            if first.agent_count() != tr.agent_count() {
                return Err(MarlError::Shape("transition agent count differs from buffer".into()));
            }
        }
        if self.items.len() < self.capacity {
            self.items.push(tr);
        } else {
            self.items[self.next] = tr;
        }
        self.next = (self.next + 1) % self.capacity;
        Ok(())
    }

    /// Distinct uniformly chosen transitions; `min(size, len)` of them.
    pub fn sample(&mut self, size: usize) -> Vec<&Transition<S>> {
        let k = size.min(self.items.len());
        let idx = sample(&mut self.rng, self.items.len(), k);
        idx.into_iter().map(|i| &self.items[i]).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<S>> {
        self.items.iter()
    }
}

/// Per-feature divisors bringing observations to order one.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsScaler<S: Scalar = f64> {
    pub scale: Vec<S>,
}

impl<S: Scalar> ObsScaler<S> {
    pub fn identity() -> Self {
        Self {
            scale: vec![S::one(); OBS_DIM],
        }
    }

    /// Largest magnitude of each exogenous feature over the series.
    pub fn from_series(series: &ExogenousSeries<S>) -> Self {
        let mut scale = vec![S::one(); OBS_DIM];
        for (i, name) in OBS_LAYOUT.iter().enumerate() {
            if let Some((_, col)) = series.columns().into_iter().find(|(c, _)| c == name) {
                let m = col.iter().fold(S::zero(), |a, x| a.max(x.abs()));
                if m > S::zero() {
                    scale[i] = m;
                }
            }
        }
        Self { scale }
    }

    pub fn apply(&self, obs: &[S]) -> Vec<S> {
        obs.iter().zip(&self.scale).map(|(x, s)| *x / *s).collect()
    }
}

/// A minibatch laid out per agent: row `r` of every matrix is transition `r`.
#[derive(Debug, Clone)]
pub struct Minibatch<S: Scalar = f64> {
    pub obs: Vec<Array2<S>>,
    pub actions: Vec<Vec<usize>>,
    pub rewards: Vec<Vec<S>>,
    pub next_obs: Vec<Array2<S>>,
    pub terminal: Vec<bool>,
}

fn stack<S: Scalar>(rows: impl Iterator<Item = Vec<S>>, n: usize, dim: usize) -> Array2<S> {
    let flat: Vec<S> = rows.flatten().collect();
    Array2::from_shape_vec((n, dim), flat).expect("observation rows have equal width")
}

impl<S: Scalar> Minibatch<S> {
    /// Scales observations and rewards as the learner sees them.
    pub fn assemble(batch: &[&Transition<S>], scaler: &ObsScaler<S>, reward_scale: S) -> Result<Self, MarlError> {
        let n = batch.len();
        if n == 0 {
            return Err(MarlError::Shape("empty minibatch".into()));
        }
        let agents = batch[0].agent_count();
        let dim = batch[0].obs[0].len();
        let mut mb = Minibatch {
            obs: Vec::with_capacity(agents),
            actions: Vec::with_capacity(agents),
            rewards: Vec::with_capacity(agents),
            next_obs: Vec::with_capacity(agents),
            terminal: batch.iter().map(|t| t.terminal).collect(),
        };
        for j in 0..agents {
            mb.obs.push(stack(batch.iter().map(|t| scaler.apply(&t.obs[j])), n, dim));
            mb.next_obs.push(stack(batch.iter().map(|t| scaler.apply(&t.next_obs[j])), n, dim));
            mb.actions.push(batch.iter().map(|t| t.actions[j]).collect());
            mb.rewards.push(batch.iter().map(|t| t.rewards[j] * reward_scale).collect());
        }
        Ok(mb)
    }

    pub fn len(&self) -> usize {
        self.terminal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal.is_empty()
    }

    pub fn agent_count(&self) -> usize {
        self.obs.len()
    }
}
