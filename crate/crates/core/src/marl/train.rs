//! The centralized-training loop and its per-episode metrics.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::approx::{entropy, optimizer_step, sample_index, soft_update, OptimizerKind, OptimizerState, Parameters};
use crate::env::{DeviceKind, JointAction, ParkEnv, ParkState, OBS_DIM};
use crate::scalar::Scalar;

use super::actor::ActorSet;
use super::buffer::{Minibatch, ObsScaler, ReplayBuffer, Transition};
use super::checkpoint::Checkpoint;
use super::config::TrainConfig;
use super::critic::Critic;
use super::losses::{actor_gradient, critic_loss};
use super::MarlError;

/// Summary of one training episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics<S: Scalar = f64> {
    pub episode: usize,
    /// Mean shared park reward per slot.
    pub mean_reward: S,
    /// Money paid to the utilities minus money received over the episode.
    pub total_cost: S,
    /// Battery and tank multipliers at episode end, averaged over hubs.
    pub lambda_b: S,
    pub lambda_w: S,
    pub violations: usize,
    /// Number of gradient updates made during the episode.
    pub updates: usize,
    /// Means over the episode's updates; meaningless when `updates == 0`.
    pub critic_loss: S,
    pub actor_loss: Vec<S>,
    /// Mean entropy of each behaviour policy along the episode.
    pub entropy: Vec<S>,
    pub attention: Option<(S, S)>,
}

/// Column names of the metrics file for `agents` agents.
pub fn metrics_header(agents: usize) -> String {
    let mut h = String::from("episode,mean_reward,total_cost,lambda_b,lambda_w,violations,critic_loss");
    for j in 0..agents {
        let _ = write!(h, ",actor_loss_{j}");
    }
    for j in 0..agents {
        let _ = write!(h, ",entropy_{j}");
    }
    h.push_str(",attn_min,attn_max");
    h
}

impl<S: Scalar> EpisodeMetrics<S> {
    /// One comma-separated record matching [`metrics_header`]. Loss and
    /// attention fields are empty when the episode made no update.
    pub fn csv_row(&self) -> String {
        let mut s = format!(
            "{},{},{},{},{},{}",
            self.episode, self.mean_reward, self.total_cost, self.lambda_b, self.lambda_w, self.violations
        );
        let updated = self.updates > 0;
        let opt = |v: S| if updated { v.to_string() } else { String::new() };
        let _ = write!(s, ",{}", opt(self.critic_loss));
        for &l in &self.actor_loss {
            let _ = write!(s, ",{}", opt(l));
        }
        for e in &self.entropy {
            let _ = write!(s, ",{e}");
        }
        match self.attention {
            Some((lo, hi)) => {
                let _ = write!(s, ",{lo},{hi}");
            }
            None => s.push_str(",,"),
        }
        s
    }
}

/// Full metrics file: header plus one record per episode.
pub fn metrics_csv<S: Scalar>(agents: usize, metrics: &[EpisodeMetrics<S>]) -> String {
    let mut s = metrics_header(agents);
    s.push('\n');
    for m in metrics {
        s.push_str(&m.csv_row());
        s.push('\n');
    }
    s
}

/// Learner state: live and target networks, optimizers, replay and RNG.
#[derive(Debug, Clone)]
pub struct Trainer<S: Scalar = f64> {
    env: ParkEnv<S>,
    cfg: TrainConfig<S>,
    kinds: Vec<DeviceKind>,
    actors: ActorSet<S>,
    target_actors: ActorSet<S>,
    critic: Critic<S>,
    target_critic: Critic<S>,
    critic_opt: OptimizerState<S>,
    actor_opts: Vec<OptimizerState<S>>,
    buffer: ReplayBuffer<S>,
    rng: ChaCha8Rng,
    state: Option<ParkState<S>>,
    episode: usize,
    steps: usize,
    updates: usize,
}

struct UpdateStats<S: Scalar> {
    critic_loss: S,
    actor_loss: Vec<S>,
    attention: Option<(S, S)>,
}

impl<S: Scalar> Trainer<S> {
    pub fn new(env: ParkEnv<S>, cfg: TrainConfig<S>) -> Result<Self, MarlError> {
        cfg.validate()?;
        let kinds = env.agent_kinds();
        let mut init = ChaCha8Rng::seed_from_u64(cfg.seed);
        let scaler = ObsScaler::from_series(env.series());
        let actors = ActorSet::new(&kinds, OBS_DIM, scaler, &cfg, &mut init);
        let critic = Critic::new(cfg.critic, &kinds, OBS_DIM, &cfg, &mut init)?;
        let adam = OptimizerKind::adam();
        let critic_opt =
            OptimizerState::new(&critic, adam, cfg.critic_lr).with_max_grad_norm(cfg.critic_max_grad_norm);
        let actor_opts = actors
            .actors
            .iter()
            .map(|a| OptimizerState::new(a, adam, cfg.actor_lr).with_max_grad_norm(cfg.actor_max_grad_norm))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let mut buffer_seed = ChaCha8Rng::seed_from_u64(cfg.seed);
        buffer_seed.set_stream(2);
        let buffer = ReplayBuffer::new(cfg.buffer, rand::Rng::gen(&mut buffer_seed));
        Ok(Self {
            target_actors: actors.clone(),
            target_critic: critic.clone(),
            env,
            kinds,
            actors,
            critic,
            critic_opt,
            actor_opts,
            buffer,
            rng,
            state: None,
            episode: 0,
            steps: 0,
            updates: 0,
            cfg,
        })
    }

    pub fn env(&self) -> &ParkEnv<S> {
        &self.env
    }

    pub fn config(&self) -> &TrainConfig<S> {
        &self.cfg
    }

    pub fn actors(&self) -> &ActorSet<S> {
        &self.actors
    }

    pub fn critic(&self) -> &Critic<S> {
        &self.critic
    }

    pub fn buffer(&self) -> &ReplayBuffer<S> {
        &self.buffer
    }

    pub fn episodes_run(&self) -> usize {
        self.episode
    }

    pub fn env_steps(&self) -> usize {
        self.steps
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// State reached at the end of the last episode, carrying the multipliers.
    pub fn last_state(&self) -> Option<&ParkState<S>> {
        self.state.as_ref()
    }

    pub fn checkpoint(&self) -> Checkpoint<S> {
        Checkpoint {
            layout: crate::env::OBS_LAYOUT_TAG.to_string(),
            hubs: self.env.hub_count(),
            config: self.cfg.clone(),
            actors: self.actors.clone(),
            critic: self.critic.clone(),
        }
    }

    fn diagnostic(&self, e: MarlError) -> MarlError {
        let diverged = matches!(
            e,
            MarlError::Divergence(_) | MarlError::Approx(crate::approx::ApproxError::Divergence(_))
        );
        if !diverged {
            return e;
        }
        let lambdas: Vec<String> = self
            .state
            .iter()
            .flat_map(|s| s.hubs.iter().map(|h| format!("({}, {})", h.lambda_b, h.lambda_w)))
            .collect();
        MarlError::Divergence(format!(
            "{e}; episode {} step {} update {}; multipliers [{}]; critic norm {}; actor norms [{}]",
            self.episode,
            self.steps,
            self.updates,
            lambdas.join(", "),
            self.critic.squared_norm().sqrt(),
            self.actors
                .actors
                .iter()
                .map(|a| a.squared_norm().sqrt().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ))
    }

    fn update(&mut self) -> Result<UpdateStats<S>, MarlError> {
        let batch = {
            let sample = self.buffer.sample(self.cfg.batch);
            Minibatch::assemble(&sample, &self.actors.scaler, self.cfg.reward_scale)?
        };
        let cl = critic_loss(
            &self.critic,
            &self.target_critic,
            &self.target_actors,
            &self.kinds,
            &batch,
            &self.cfg,
            &mut self.rng,
        )?;
        optimizer_step(&mut self.critic, &cl.grads, &mut self.critic_opt)?;
        let ag = actor_gradient(&self.actors, &self.critic, &self.kinds, &batch, &self.cfg, &mut self.rng)?;
        for ((actor, g), opt) in self.actors.actors.iter_mut().zip(&ag.grads).zip(&mut self.actor_opts) {
            optimizer_step(actor, g, opt)?;
        }
        soft_update(&mut self.target_critic, &self.critic, self.cfg.tau);
        for (t, a) in self.target_actors.actors.iter_mut().zip(&self.actors.actors) {
            soft_update(t, a, self.cfg.tau);
        }
        self.updates += 1;
        Ok(UpdateStats {
            critic_loss: cl.loss,
            actor_loss: ag.losses,
            attention: cl.attention_range,
        })
    }

    /// Plays one episode with the current stochastic policies, storing every
    /// transition and updating after warm-up.
    pub fn run_episode(&mut self) -> Result<EpisodeMetrics<S>, MarlError> {
        self.run_episode_inner().map_err(|e| self.diagnostic(e))
    }

    fn run_episode_inner(&mut self) -> Result<EpisodeMetrics<S>, MarlError> {
        let horizon = self.env.horizon();
        let agents = self.kinds.len();
        let mut state = match &self.state {
            Some(prev) => self.env.initial_state_carrying(prev),
            None => self.env.initial_state(),
        };
        let inv_t = S::one() / S::lit(horizon as f64);
        let mut m = EpisodeMetrics {
            episode: self.episode,
            mean_reward: S::zero(),
            total_cost: S::zero(),
            lambda_b: S::zero(),
            lambda_w: S::zero(),
            violations: 0,
            updates: 0,
            critic_loss: S::zero(),
            actor_loss: vec![S::zero(); agents],
            entropy: vec![S::zero(); agents],
            attention: None,
        };
        let ready = self.cfg.warmup.max(self.cfg.batch);
        for t in 0..horizon {
            let obs = self.env.observe_all(&state);
            let mut actions = Vec::with_capacity(agents);
            for (j, o) in obs.iter().enumerate() {
                let p = self.actors.actors[j].probabilities(&self.actors.scaler.apply(o))?;
                m.entropy[j] += entropy(&p) * inv_t;
                actions.push(sample_index(&p, &mut self.rng));
            }
            let joint = JointAction::from_agent_indices(&actions)?;
            let out = self.env.step(&state, &joint)?;
            m.mean_reward += out.reward * inv_t;
            m.total_cost += out.market_cost;
            m.violations += out.violations;
            let next_obs = self.env.observe_all(&out.next_state);
            self.buffer.push(Transition {
                obs,
                actions,
                rewards: out.agent_rewards.clone(),
                next_obs,
                terminal: t + 1 == horizon,
                t,
            })?;
            self.steps += 1;
            state = out.next_state;
            self.state = Some(state.clone());
            if self.buffer.len() >= ready && self.steps % self.cfg.update_every == 0 {
                let u = self.update()?;
                m.updates += 1;
                m.critic_loss += u.critic_loss;
                for (acc, l) in m.actor_loss.iter_mut().zip(u.actor_loss) {
                    *acc += l;
                }
                if let Some((lo, hi)) = u.attention {
                    m.attention = Some(match m.attention {
                        Some((a, b)) => (a.min(lo), b.max(hi)),
                        None => (lo, hi),
                    });
                }
            }
        }
        if m.updates > 0 {
            let inv_u = S::one() / S::lit(m.updates as f64);
            m.critic_loss *= inv_u;
            for l in &mut m.actor_loss {
                *l *= inv_u;
            }
        }
        let hubs = S::lit(state.hubs.len() as f64);
        for h in &state.hubs {
            m.lambda_b += h.lambda_b / hubs;
            m.lambda_w += h.lambda_w / hubs;
        }
        self.episode += 1;
        Ok(m)
    }

    /// Runs `episodes` episodes, handing each record to `sink`.
    pub fn run(
        &mut self,
        episodes: usize,
        mut sink: impl FnMut(&EpisodeMetrics<S>),
    ) -> Result<Vec<EpisodeMetrics<S>>, MarlError> {
        let mut all = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let m = self.run_episode()?;
            sink(&m);
            all.push(m);
        }
        Ok(all)
    }
}

/// Final checkpoint and every episode record of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutput<S: Scalar = f64> {
    pub checkpoint: Checkpoint<S>,
    pub metrics: Vec<EpisodeMetrics<S>>,
}

/// Trains for `cfg.episodes` episodes from a fresh learner.
pub fn train<S: Scalar>(
    env: ParkEnv<S>,
    cfg: TrainConfig<S>,
    sink: impl FnMut(&EpisodeMetrics<S>),
) -> Result<TrainOutput<S>, MarlError> {
    let episodes = cfg.episodes;
    let mut trainer = Trainer::new(env, cfg)?;
    let metrics = trainer.run(episodes, sink)?;
    Ok(TrainOutput {
        checkpoint: trainer.checkpoint(),
        metrics,
    })
}
