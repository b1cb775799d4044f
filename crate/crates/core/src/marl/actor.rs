//! Decentralized categorical actors. Acting needs only the agent's own
//! observation and its own policy parameters.

use rand::Rng;

use crate::approx::{argmax, categorical_policy, sample_index, Mlp, Parameters, TensorRef};
use crate::env::DeviceKind;
use crate::scalar::Scalar;

use super::buffer::ObsScaler;
use super::config::TrainConfig;
use super::MarlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionMode {
    /// Most probable action; the first one wins ties.
    Greedy,
    /// Draw from the policy distribution.
    Sampled,
}

impl ExecutionMode {
    pub fn name(self) -> &'static str {
        match self {
            ExecutionMode::Greedy => "greedy",
            ExecutionMode::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Actor<S: Scalar = f64> {
    pub kind: DeviceKind,
    /// Maps a scaled observation to action logits.
    pub net: Mlp<S>,
}

impl<S: Scalar> Actor<S> {
    pub fn new<R: Rng>(kind: DeviceKind, obs_dim: usize, hidden: usize, slope: S, rng: &mut R) -> Self {
        Self {
            kind,
            net: Mlp::new(&[obs_dim, hidden, hidden, kind.action_count()], slope, rng),
        }
    }

    /// Policy over this agent's actions given its scaled observation.
    pub fn probabilities(&self, scaled_obs: &[S]) -> Result<Vec<S>, MarlError> {
        Ok(categorical_policy(&self.net, scaled_obs)?)
    }

    pub fn act<R: Rng>(&self, scaled_obs: &[S], mode: ExecutionMode, rng: &mut R) -> Result<usize, MarlError> {
        let p = self.probabilities(scaled_obs)?;
        Ok(match mode {
            ExecutionMode::Greedy => argmax(&p),
            ExecutionMode::Sampled => sample_index(&p, rng),
        })
    }
}

impl<S: Scalar> Parameters<S> for Actor<S> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<TensorRef<'a, S>>) {
        self.net.collect(prefix, out);
    }

    fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [S]>) {
        self.net.collect_mut(out);
    }

    fn zeros_like(&self) -> Self {
        Self {
            kind: self.kind,
            net: self.net.zeros_like(),
        }
    }
}

/// One actor per agent plus the shared observation scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorSet<S: Scalar = f64> {
    pub actors: Vec<Actor<S>>,
    pub scaler: ObsScaler<S>,
}

impl<S: Scalar> ActorSet<S> {
    pub fn new<R: Rng>(
        kinds: &[DeviceKind],
        obs_dim: usize,
        scaler: ObsScaler<S>,
        cfg: &TrainConfig<S>,
        rng: &mut R,
    ) -> Self {
        Self {
            actors: kinds
                .iter()
                .map(|&k| Actor::new(k, obs_dim, cfg.actor_hidden, cfg.leaky_slope, rng))
                .collect(),
            scaler,
        }
    }

    pub fn len(&self) -> usize {
        self.actors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actors.is_empty()
    }

    pub fn kinds(&self) -> Vec<DeviceKind> {
        self.actors.iter().map(|a| a.kind).collect()
    }

    /// Action of agent `j` from its raw local observation.
    pub fn act_agent<R: Rng>(
        &self,
        j: usize,
        own_obs: &[S],
        mode: ExecutionMode,
        rng: &mut R,
    ) -> Result<usize, MarlError> {
        let actor = self
            .actors
            .get(j)
            .ok_or_else(|| MarlError::Shape(format!("no actor for agent {j}")))?;
        actor.act(&self.scaler.apply(own_obs), mode, rng)
    }

    /// Joint action, each agent reading only its own observation.
    pub fn act_all<R: Rng>(&self, obs: &[Vec<S>], mode: ExecutionMode, rng: &mut R) -> Result<Vec<usize>, MarlError> {
        if obs.len() != self.actors.len() {
            return Err(MarlError::Shape(format!(
                "{} observations for {} actors",
                obs.len(),
                self.actors.len()
            )));
        }
        obs.iter().enumerate().map(|(j, o)| self.act_agent(j, o, mode, rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn action_space_follows_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = TrainConfig::<f64>::default();
        let set = ActorSet::new(&DeviceKind::ALL, 10, ObsScaler::identity(), &cfg, &mut rng);
        for a in &set.actors {
            assert_eq!(a.net.output_dim(), a.kind.action_count());
        }
        let obs = vec![vec![0.1; 10]; 4];
        let acts = set.act_all(&obs, ExecutionMode::Sampled, &mut rng).unwrap();
        for (a, k) in acts.iter().zip(DeviceKind::ALL) {
            assert!(*a < k.action_count());
        }
        assert!(set.act_all(&obs[..3], ExecutionMode::Greedy, &mut rng).is_err());
    }

    #[test]
    fn greedy_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Actor::<f64>::new(DeviceKind::Battery, 10, 16, 0.01, &mut rng);
        let o = vec![0.3; 10];
        let first = a.act(&o, ExecutionMode::Greedy, &mut rng).unwrap();
        for _ in 0..5 {
            assert_eq!(a.act(&o, ExecutionMode::Greedy, &mut rng).unwrap(), first);
        }
    }
}
