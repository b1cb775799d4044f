//! Categorical policy heads on top of an [`Mlp`] producing logits.

use ndarray::Array2;
use rand::Rng;

use crate::scalar::Scalar;

use super::mlp::{Mlp, MlpCache};
use super::ApproxError;

/// Log-probabilities of the categorical distribution with these logits.
pub fn log_softmax<S: Scalar>(logits: &[S]) -> Vec<S> {
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let lse = logits.iter().fold(S::zero(), |acc, &l| acc + (l - max).exp()).ln() + max;
    logits.iter().map(|&l| l - lse).collect()
}

/// Probabilities from logits. Entries that would underflow are raised to
/// the smallest positive normal so every action keeps positive mass.
pub fn probabilities<S: Scalar>(logits: &[S]) -> Vec<S> {
    log_softmax(logits)
        .into_iter()
        .map(|lp| lp.exp().max(S::min_positive_value()))
        .collect()
}

/// Action distribution of a policy network for one observation.
pub fn categorical_policy<S: Scalar>(params: &Mlp<S>, observation: &[S]) -> Result<Vec<S>, ApproxError> {
    let logits = params.forward_vec(observation)?;
    Ok(probabilities(&logits))
}

/// Shannon entropy in nats.
pub fn entropy<S: Scalar>(probs: &[S]) -> S {
    probs
        .iter()
        .filter(|&&p| p > S::zero())
        .fold(S::zero(), |acc, &p| acc - p * p.ln())
}

/// Inverse-CDF draw.
pub fn sample_index<S: Scalar, R: Rng>(probs: &[S], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.to_f64_lossy();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Batched policy evaluation.
#[derive(Debug, Clone)]
pub struct PolicyBatch<S: Scalar = f64> {
    pub probs: Array2<S>,
    pub log_probs: Array2<S>,
    pub cache: MlpCache<S>,
}

pub fn policy_forward<S: Scalar>(params: &Mlp<S>, observations: &Array2<S>) -> Result<PolicyBatch<S>, ApproxError> {
    let (logits, cache) = params.forward(observations)?;
    let mut probs = Array2::zeros(logits.dim());
    let mut log_probs = Array2::zeros(logits.dim());
    for (r, row) in logits.rows().into_iter().enumerate() {
        let lp = log_softmax(row.as_slice().expect("standard layout"));
        for (c, l) in lp.into_iter().enumerate() {
            log_probs[[r, c]] = l;
            probs[[r, c]] = l.exp().max(S::min_positive_value());
        }
    }
    Ok(PolicyBatch {
        probs,
        log_probs,
        cache,
    })
}

/// Gradient of `sum_r coef[r] * log pi(a_r | o_r)` with respect to the
/// logits: `coef[r] * (onehot(a_r) - pi(. | o_r))`.
pub fn log_prob_logit_grad<S: Scalar>(probs: &Array2<S>, actions: &[usize], coef: &[S]) -> Array2<S> {
    let mut g = probs.mapv(|p| -p);
    for (r, (&a, &c)) in actions.iter().zip(coef).enumerate() {
        g[[r, a]] += S::one();
        g.row_mut(r).mapv_inplace(|x| x * c);
    }
    g
}
