use std::time::Instant;

use ndarray::Array2;
use parkmarl::approx::Parameters;
use parkmarl::env::{DeviceKind, OBS_DIM};
use parkmarl::marl::{
    actor_gradient_for, actor_losses, critic_loss_against, critic_targets, draw_actor_sample, score_weights,
    ActorEstimator, ActorSet, Critic, CriticKind, Minibatch, ObsScaler, TrainConfig,
};
use rand::Rng;

use crate::common::{rel_err, rng, Outcome};

const H: f64 = 1e-5;
const LIMIT: f64 = 1e-4;

fn cfg(estimator: ActorEstimator) -> TrainConfig<f64> {
    TrainConfig {
        critic_hidden: 8,
        actor_hidden: 8,
        heads: 2,
        leaky_slope: 0.1,
        entropy: 0.2,
        gamma: 0.9,
        estimator,
        ..TrainConfig::default()
    }
}

fn batch(kinds: &[DeviceKind], n: usize) -> Minibatch<f64> {
    let mut r = rng(71);
    let obs = |r: &mut rand_chacha::ChaCha8Rng| Array2::from_shape_fn((n, OBS_DIM), |_| r.gen_range(-1.0..1.0));
    Minibatch {
        obs: kinds.iter().map(|_| obs(&mut r)).collect(),
        next_obs: kinds.iter().map(|_| obs(&mut r)).collect(),
        actions: kinds.iter().map(|k| (0..n).map(|_| r.gen_range(0..k.action_count())).collect()).collect(),
        rewards: kinds.iter().map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect(),
        terminal: (0..n).map(|i| i == n - 1).collect(),
    }
}

/// Largest relative error between `grads` and central differences of
/// `loss`, over every parameter entry, and the entry count.
fn worst<P: Parameters<f64> + Clone>(params: &P, grads: &P, loss: impl Fn(&P) -> f64) -> (f64, usize) {
    let base = params.flat();
    let analytic = grads.flat();
    let mut p = params.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        p.set_flat(i, base[i] + H);
        let up = loss(&p);
        p.set_flat(i, base[i] - H);
        let down = loss(&p);
        p.set_flat(i, base[i]);
        worst = worst.max(rel_err(a, (up - down) / (2.0 * H)));
    }
    (worst, analytic.len())
}

pub fn run() -> Outcome {
    let start = Instant::now();
    let kinds = [DeviceKind::Battery, DeviceKind::Boiler];
    let mut report = Vec::new();
    let mut checked = 0;
    let mut max_err: f64 = 0.0;

    let c = cfg(ActorEstimator::Sampled);
    let critic = Critic::new(CriticKind::Attention, &kinds, OBS_DIM, &c, &mut rng(72)).unwrap();
    let target = Critic::new(CriticKind::Attention, &kinds, OBS_DIM, &c, &mut rng(73)).unwrap();
    let scaler = ObsScaler { scale: vec![1.0; OBS_DIM] };
    let actors = ActorSet::new(&kinds, OBS_DIM, scaler, &c, &mut rng(86));
    let mb = batch(&kinds, 4);
    let y = critic_targets(&target, &actors, &kinds, &mb, &c, &mut rng(75)).unwrap();
    let g = critic_loss_against(&critic, &kinds, &mb, &y).unwrap();
    let (e, n) = worst(&critic, &g.grads, |p| critic_loss_against(p, &kinds, &mb, &y).unwrap().loss);
    report.push(format!("critic loss: {n} parameters, max rel. error {e:.2e}"));
    checked += n;
    max_err = max_err.max(e);

    for estimator in [ActorEstimator::Sampled, ActorEstimator::Expected] {
        let c = cfg(estimator);
        let sample = draw_actor_sample(&actors, &critic, &kinds, &mb, &mut rng(76)).unwrap();
        let weights = score_weights(&actors, &mb, &sample, &c).unwrap();
        let g = actor_gradient_for(&actors, &mb, &sample, &c).unwrap();
        for j in 0..kinds.len() {
            let (e, n) = worst(&actors.actors[j], &g.grads[j], |a| {
                let mut set = actors.clone();
                set.actors[j] = a.clone();
                actor_losses(&set, &mb, &sample, &weights, &c).unwrap()[j]
            });
            report.push(format!(
                "actor {j} surrogate ({}): {n} parameters, max rel. error {e:.2e}",
                estimator.name()
            ));
            checked += n;
            max_err = max_err.max(e);
        }
    }
    let pass = max_err < LIMIT && checked >= 500;
    Outcome::new(pass, format!("{checked} parameters, max relative error {max_err:.2e} (limit {LIMIT:e})"))
        .with_report(report)
        .within(start, 60.0)
}
