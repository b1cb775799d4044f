//! Critic regression loss and the counterfactual soft policy gradient.

use ndarray::Array2;
use rand::Rng;

use crate::approx::{entropy, policy_forward, sample_index, Parameters, PolicyBatch};
use crate::env::DeviceKind;
use crate::scalar::Scalar;

use super::actor::{Actor, ActorSet};
use super::buffer::Minibatch;
use super::config::{ActorEstimator, TrainConfig};
use super::critic::{counterfactual_baseline, Critic};
use super::MarlError;

/// `A_j(a) = Q_j(a) - b` for every candidate action.
pub fn advantages<S: Scalar>(probs: &[S], q: &[S]) -> Vec<S> {
    let b = counterfactual_baseline(probs, q);
    q.iter().map(|&v| v - b).collect()
}

fn row<S: Scalar>(m: &Array2<S>, r: usize) -> &[S] {
    let w = m.ncols();
    &m.as_slice().expect("standard layout")[r * w..(r + 1) * w]
}

fn divergence(what: &str) -> MarlError {
    MarlError::Divergence(format!("non-finite {what}"))
}

fn policies<S: Scalar>(actors: &ActorSet<S>, obs: &[Array2<S>]) -> Result<Vec<PolicyBatch<S>>, MarlError> {
    actors
        .actors
        .iter()
        .zip(obs)
        .map(|(a, o)| policy_forward(&a.net, o).map_err(MarlError::from))
        .collect()
}

fn sample_all<S: Scalar, R: Rng>(pol: &[PolicyBatch<S>], rng: &mut R) -> Vec<Vec<usize>> {
    pol.iter()
        .map(|p| (0..p.probs.nrows()).map(|r| sample_index(row(&p.probs, r), rng)).collect())
        .collect()
}

/// Regression targets `y_j = r_j + gamma * E_{a'_j ~ pi'_j}[Q'_j(s', (a'_j, a'_K)) - rho log pi'_j(a'_j)]`.
/// The expectation over the agent's own next action is exact; the other
/// agents' next actions are drawn from their target policies. Terminal
/// transitions keep only the reward.
pub fn critic_targets<S: Scalar, R: Rng>(
    target_critic: &Critic<S>,
    target_actors: &ActorSet<S>,
    kinds: &[DeviceKind],
    batch: &Minibatch<S>,
    cfg: &TrainConfig<S>,
    rng: &mut R,
) -> Result<Vec<Vec<S>>, MarlError> {
    let n = batch.len();
    let mut y = batch.rewards.clone();
    if cfg.gamma == S::zero() || batch.terminal.iter().all(|&t| t) {
        return Ok(y);
    }
    let pol = policies(target_actors, &batch.next_obs)?;
    let next_actions = sample_all(&pol, rng);
    let (q, _) = target_critic.forward(kinds, &batch.next_obs, &next_actions)?;
    for (j, yj) in y.iter_mut().enumerate() {
        for (r, yr) in yj.iter_mut().enumerate().take(n) {
            if batch.terminal[r] {
                continue;
            }
            let p = row(&pol[j].probs, r);
            let lp = row(&pol[j].log_probs, r);
            let qr = row(&q[j], r);
            let soft = p
                .iter()
                .zip(lp)
                .zip(qr)
                .fold(S::zero(), |acc, ((&p, &l), &v)| acc + p * (v - cfg.entropy * l));
            *yr += cfg.gamma * soft;
        }
    }
    Ok(y)
}

#[derive(Debug, Clone)]
pub struct CriticLoss<S: Scalar = f64> {
    /// Sum over agents of the minibatch-mean squared error.
    pub loss: S,
    pub grads: Critic<S>,
    /// Smallest and largest attention weight in the pass, if any.
    pub attention_range: Option<(S, S)>,
}

/// Loss and gradients of the live critic against fixed targets.
pub fn critic_loss_against<S: Scalar>(
    critic: &Critic<S>,
    kinds: &[DeviceKind],
    batch: &Minibatch<S>,
    targets: &[Vec<S>],
) -> Result<CriticLoss<S>, MarlError> {
    let n = batch.len();
    if n == 0 {
        return Err(MarlError::Shape("empty minibatch".into()));
    }
    let (q, cache) = critic.forward(kinds, &batch.obs, &batch.actions)?;
    let inv_n = S::one() / S::lit(n as f64);
    let two = S::lit(2.0);
    let mut loss = S::zero();
    let mut d_q = Vec::with_capacity(q.len());
    for (j, qj) in q.iter().enumerate() {
        let mut d = Array2::zeros(qj.dim());
        for r in 0..n {
            let a = batch.actions[j][r];
            let diff = qj[[r, a]] - targets[j][r];
            loss += diff * diff * inv_n;
            d[[r, a]] = two * diff * inv_n;
        }
        d_q.push(d);
    }
    if !loss.is_finite() {
        return Err(divergence("critic loss"));
    }
    let grads = critic.backward(&cache, &d_q)?;
    if !grads.all_finite() {
        return Err(divergence("critic gradient"));
    }
    Ok(CriticLoss {
        loss,
        grads,
        attention_range: cache.attention_range(),
    })
}

/// Targets from the target networks, then the live critic's loss against them.
#[allow(clippy::too_many_arguments)]
pub fn critic_loss<S: Scalar, R: Rng>(
    critic: &Critic<S>,
    target_critic: &Critic<S>,
    target_actors: &ActorSet<S>,
    kinds: &[DeviceKind],
    batch: &Minibatch<S>,
    cfg: &TrainConfig<S>,
    rng: &mut R,
) -> Result<CriticLoss<S>, MarlError> {
    let y = critic_targets(target_critic, target_actors, kinds, batch, cfg, rng)?;
    critic_loss_against(critic, kinds, batch, &y)
}

/// Fresh current-policy actions at the replayed states and the critic's
/// Q-vectors for them.
#[derive(Debug, Clone)]
pub struct ActorSample<S: Scalar = f64> {
    pub actions: Vec<Vec<usize>>,
    pub q: Vec<Array2<S>>,
}

pub fn draw_actor_sample<S: Scalar, R: Rng>(
    actors: &ActorSet<S>,
    critic: &Critic<S>,
    kinds: &[DeviceKind],
    batch: &Minibatch<S>,
    rng: &mut R,
) -> Result<ActorSample<S>, MarlError> {
    let pol = policies(actors, &batch.obs)?;
    let actions = sample_all(&pol, rng);
    let (q, _) = critic.forward(kinds, &batch.obs, &actions)?;
    Ok(ActorSample { actions, q })
}

/// Per-agent score weights `Q_j(a_j) - rho log pi_j(a_j) - b` of the sampled
/// estimator, evaluated under `actors`.
pub fn score_weights<S: Scalar>(
    actors: &ActorSet<S>,
    batch: &Minibatch<S>,
    sample: &ActorSample<S>,
    cfg: &TrainConfig<S>,
) -> Result<Vec<Vec<S>>, MarlError> {
    let pol = policies(actors, &batch.obs)?;
    Ok(pol
        .iter()
        .enumerate()
        .map(|(j, p)| {
            (0..batch.len())
                .map(|r| {
                    let a = sample.actions[j][r];
                    let probs = row(&p.probs, r);
                    let q = row(&sample.q[j], r);
                    q[a] - cfg.entropy * p.log_probs[[r, a]] - counterfactual_baseline(probs, q)
                })
                .collect()
        })
        .collect())
}

/// Per-agent actor losses (negated surrogate objectives) under `actors`.
/// For the sampled estimator the score weights are supplied and held fixed;
/// the expected estimator's objective is
/// `mean_r sum_a pi(a) Q(a) + rho H(pi)`.
pub fn actor_losses<S: Scalar>(
    actors: &ActorSet<S>,
    batch: &Minibatch<S>,
    sample: &ActorSample<S>,
    weights: &[Vec<S>],
    cfg: &TrainConfig<S>,
) -> Result<Vec<S>, MarlError> {
    let pol = policies(actors, &batch.obs)?;
    let inv_n = S::one() / S::lit(batch.len() as f64);
    Ok(pol
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let total = (0..batch.len()).fold(S::zero(), |acc, r| {
                acc + match cfg.estimator {
                    ActorEstimator::Sampled => weights[j][r] * p.log_probs[[r, sample.actions[j][r]]],
                    ActorEstimator::Expected => {
                        let probs = row(&p.probs, r);
                        counterfactual_baseline(probs, row(&sample.q[j], r)) + cfg.entropy * entropy(probs)
                    }
                }
            });
            -total * inv_n
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct ActorGradient<S: Scalar = f64> {
    /// Gradients of each agent's loss with respect to its own actor.
    pub grads: Vec<Actor<S>>,
    pub losses: Vec<S>,
    /// Mean policy entropy per agent over the minibatch.
    pub entropies: Vec<S>,
}

/// Gradients of [`actor_losses`] for a fixed sample.
pub fn actor_gradient_for<S: Scalar>(
    actors: &ActorSet<S>,
    batch: &Minibatch<S>,
    sample: &ActorSample<S>,
    cfg: &TrainConfig<S>,
) -> Result<ActorGradient<S>, MarlError> {
    let n = batch.len();
    let inv_n = S::one() / S::lit(n as f64);
    let pol = policies(actors, &batch.obs)?;
    let weights = score_weights(actors, batch, sample, cfg)?;
    let mut out = ActorGradient {
        grads: Vec::with_capacity(actors.len()),
        losses: Vec::with_capacity(actors.len()),
        entropies: Vec::with_capacity(actors.len()),
    };
    for (j, (actor, p)) in actors.actors.iter().zip(&pol).enumerate() {
        let mut d_logits = Array2::zeros(p.probs.dim());
        let mut objective = S::zero();
        let mut ent = S::zero();
        for r in 0..n {
            let probs = row(&p.probs, r);
            let lp = row(&p.log_probs, r);
            let q = row(&sample.q[j], r);
            let h = entropy(probs);
            ent += h * inv_n;
            match cfg.estimator {
                ActorEstimator::Sampled => {
                    let a = sample.actions[j][r];
                    let w = weights[j][r];
                    objective += w * lp[a];
                    for (k, &pk) in probs.iter().enumerate() {
                        let onehot = if k == a { S::one() } else { S::zero() };
                        d_logits[[r, k]] = -w * (onehot - pk) * inv_n;
                    }
                }
                ActorEstimator::Expected => {
                    let b = counterfactual_baseline(probs, q);
                    objective += b + cfg.entropy * h;
                    let mean_lp = -h;
                    for (k, &pk) in probs.iter().enumerate() {
                        let g = pk * ((q[k] - b) - cfg.entropy * (lp[k] - mean_lp));
                        d_logits[[r, k]] = -g * inv_n;
                    }
                }
            }
        }
        let (g, _) = actor.net.backward(&p.cache, &d_logits)?;
        if !g.all_finite() {
            return Err(divergence(&format!("actor {j} gradient")));
        }
        out.grads.push(Actor { kind: actor.kind, net: g });
        out.losses.push(-objective * inv_n);
        out.entropies.push(ent);
    }
    Ok(out)
}

/// Fresh-sample counterfactual policy gradient for every actor, with the
/// critic frozen.
pub fn actor_gradient<S: Scalar, R: Rng>(
    actors: &ActorSet<S>,
    critic: &Critic<S>,
    kinds: &[DeviceKind],
    batch: &Minibatch<S>,
    cfg: &TrainConfig<S>,
    rng: &mut R,
) -> Result<ActorGradient<S>, MarlError> {
    let sample = draw_actor_sample(actors, critic, kinds, batch, rng)?;
    actor_gradient_for(actors, batch, &sample, cfg)
}
