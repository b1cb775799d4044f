//! Centralized critics emitting one Q value per candidate action of each agent.

use ndarray::{concatenate, s, Array2, Axis};
use rand::Rng;

use crate::approx::{AttentionCache, AttentionParams, Mlp, MlpCache, Parameters, TensorRef, WeightMode};
use crate::env::DeviceKind;
use crate::scalar::Scalar;

use super::config::{CriticKind, TrainConfig};
use super::MarlError;

/// Per-agent encoders and heads around one shared attention block.
///
/// Agent `j` is encoded twice: `sa[j]` embeds its observation and action
/// (the keys and values other agents attend to) and `obs[j]` embeds its
/// observation alone (its query and the first half of the head input).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionCritic<S: Scalar = f64> {
    pub sa: Vec<Mlp<S>>,
    pub obs: Vec<Mlp<S>>,
    pub attention: AttentionParams<S>,
    pub heads: Vec<Mlp<S>>,
    pub mode: WeightMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Critic<S: Scalar = f64> {
    Attention(AttentionCritic<S>),
    /// `heads[j]` reads agent `j`'s observation and every other agent's
    /// observation and action.
    Concat(Vec<Mlp<S>>),
    /// `heads[j]` reads agent `j`'s observation only.
    Local(Vec<Mlp<S>>),
}

#[derive(Debug, Clone)]
pub enum CriticCache<S: Scalar = f64> {
    Attention {
        sa: Vec<MlpCache<S>>,
        obs: Vec<MlpCache<S>>,
        attention: AttentionCache<S>,
        heads: Vec<MlpCache<S>>,
    },
    Heads(Vec<MlpCache<S>>),
}

impl<S: Scalar> CriticCache<S> {
    /// Smallest and largest attention weight of the pass, if any.
    pub fn attention_range(&self) -> Option<(S, S)> {
        let CriticCache::Attention { attention, .. } = self else {
            return None;
        };
        let mut lo = S::infinity();
        let mut hi = S::neg_infinity();
        for h in 0..attention.head_count() {
            for j in 0..attention.agent_count() {
                for &w in attention.weights(h, j) {
                    lo = lo.min(w);
                    hi = hi.max(w);
                }
            }
        }
        Some((lo, hi))
    }

    pub fn attention(&self) -> Option<&AttentionCache<S>> {
        match self {
            CriticCache::Attention { attention, .. } => Some(attention),
            CriticCache::Heads(_) => None,
        }
    }
}

/// Rows of `obs` followed by the one-hot encoding of `actions`.
pub fn with_one_hot<S: Scalar>(obs: &Array2<S>, actions: &[usize], count: usize) -> Array2<S> {
    let d = obs.ncols();
    let mut x = Array2::zeros((obs.nrows(), d + count));
    x.slice_mut(s![.., ..d]).assign(obs);
    for (r, &a) in actions.iter().enumerate() {
        x[[r, d + a]] = S::one();
    }
    x
}

fn check_inputs<S: Scalar>(
    kinds: &[DeviceKind],
    obs: &[Array2<S>],
    actions: &[Vec<usize>],
) -> Result<usize, MarlError> {
    if obs.len() != kinds.len() || actions.len() != kinds.len() {
        return Err(MarlError::Shape(format!(
            "critic built for {} agents got {} observations and {} actions",
            kinds.len(),
            obs.len(),
            actions.len()
        )));
    }
    let n = obs[0].nrows();
    for (j, (o, a)) in obs.iter().zip(actions).enumerate() {
        if o.nrows() != n || a.len() != n {
            return Err(MarlError::Shape(format!("agent {j} batch size differs")));
        }
        if let Some(&bad) = a.iter().find(|&&x| x >= kinds[j].action_count()) {
            return Err(MarlError::Shape(format!("agent {j} action {bad} out of range")));
        }
    }
    Ok(n)
}

impl<S: Scalar> Critic<S> {
    pub fn new<R: Rng>(
        kind: CriticKind,
        kinds: &[DeviceKind],
        obs_dim: usize,
        cfg: &TrainConfig<S>,
        rng: &mut R,
    ) -> Result<Self, MarlError> {
        let h = cfg.critic_hidden;
        let slope = cfg.leaky_slope;
        if kinds.len() < 2 && matches!(kind, CriticKind::Attention | CriticKind::UniformAttention) {
            return Err(MarlError::InvalidConfig("attention critics need at least two agents".into()));
        }
        Ok(match kind {
            CriticKind::Attention | CriticKind::UniformAttention => {
                let sa = kinds
                    .iter()
                    .map(|k| Mlp::new_rectified(&[obs_dim + k.action_count(), h], slope, rng))
                    .collect();
                let obs = kinds.iter().map(|_| Mlp::new_rectified(&[obs_dim, h], slope, rng)).collect();
                let attention = AttentionParams::new(cfg.heads, h, cfg.head_dim(), cfg.head_dim(), slope, rng)?;
                let out = attention.output_dim();
                let heads = kinds
                    .iter()
                    .map(|k| Mlp::new(&[h + out, h, k.action_count()], slope, rng))
                    .collect();
                Critic::Attention(AttentionCritic {
                    sa,
                    obs,
                    attention,
                    heads,
                    mode: if kind == CriticKind::Attention {
                        WeightMode::Learned
                    } else {
                        WeightMode::Uniform
                    },
                })
            }
            CriticKind::Concat => {
                let global: usize = kinds.iter().map(|k| obs_dim + k.action_count()).sum();
                Critic::Concat(
                    kinds
                        .iter()
                        .map(|k| {
                            let input = global - k.action_count();
                            Mlp::new(&[input, h, h, k.action_count()], slope, rng)
                        })
                        .collect(),
                )
            }
            CriticKind::Local => Critic::Local(
                kinds
                    .iter()
                    .map(|k| Mlp::new(&[obs_dim, h, h, k.action_count()], slope, rng))
                    .collect(),
            ),
        })
    }

    pub fn kind(&self) -> CriticKind {
        match self {
            Critic::Attention(a) if a.mode == WeightMode::Learned => CriticKind::Attention,
            Critic::Attention(_) => CriticKind::UniformAttention,
            Critic::Concat(_) => CriticKind::Concat,
            Critic::Local(_) => CriticKind::Local,
        }
    }

    pub fn agent_count(&self) -> usize {
        match self {
            Critic::Attention(a) => a.heads.len(),
            Critic::Concat(h) | Critic::Local(h) => h.len(),
        }
    }

    fn kinds_from_heads(&self) -> Vec<usize> {
        let heads = match self {
            Critic::Attention(a) => &a.heads,
            Critic::Concat(h) | Critic::Local(h) => h,
        };
        heads.iter().map(|m| m.output_dim()).collect()
    }

    /// Q-vectors for every agent: row `r` of `q[j]` holds
    /// `Q_j(s_r, (a', a_{-j,r}))` for each candidate action `a'` of agent `j`.
    /// Agent `j`'s own entry of `actions` is never read.
    pub fn forward(
        &self,
        kinds: &[DeviceKind],
        obs: &[Array2<S>],
        actions: &[Vec<usize>],
    ) -> Result<(Vec<Array2<S>>, CriticCache<S>), MarlError> {
        check_inputs(kinds, obs, actions)?;
        if self.kinds_from_heads() != kinds.iter().map(|k| k.action_count()).collect::<Vec<_>>() {
            return Err(MarlError::Shape("critic heads do not match the agent kinds".into()));
        }
        match self {
            Critic::Attention(c) => {
                let mut sa_out = Vec::with_capacity(kinds.len());
                let mut sa_cache = Vec::with_capacity(kinds.len());
                let mut ob_out = Vec::with_capacity(kinds.len());
                let mut ob_cache = Vec::with_capacity(kinds.len());
                for (j, k) in kinds.iter().enumerate() {
                    let (e, cache) = c.sa[j].forward(&with_one_hot(&obs[j], &actions[j], k.action_count()))?;
                    sa_out.push(e);
                    sa_cache.push(cache);
                    let (e, cache) = c.obs[j].forward(&obs[j])?;
                    ob_out.push(e);
                    ob_cache.push(cache);
                }
                let (z, att) = c.attention.forward_all(&ob_out, &sa_out, c.mode)?;
                let mut q = Vec::with_capacity(kinds.len());
                let mut head_cache = Vec::with_capacity(kinds.len());
                for j in 0..kinds.len() {
                    let x = concatenate(Axis(1), &[ob_out[j].view(), z[j].view()])
                        .map_err(|e| MarlError::Shape(e.to_string()))?;
                    let (y, cache) = c.heads[j].forward(&x)?;
                    q.push(y);
                    head_cache.push(cache);
                }
                Ok((
                    q,
                    CriticCache::Attention {
                        sa: sa_cache,
                        obs: ob_cache,
                        attention: att,
                        heads: head_cache,
                    },
                ))
            }
            Critic::Concat(heads) => {
                let encoded: Vec<Array2<S>> = kinds
                    .iter()
                    .enumerate()
                    .map(|(l, k)| with_one_hot(&obs[l], &actions[l], k.action_count()))
                    .collect();
                let mut q = Vec::with_capacity(kinds.len());
                let mut caches = Vec::with_capacity(kinds.len());
                for (j, head) in heads.iter().enumerate() {
                    let mut parts = vec![obs[j].view()];
                    parts.extend((0..kinds.len()).filter(|&l| l != j).map(|l| encoded[l].view()));
                    let x = concatenate(Axis(1), &parts).map_err(|e| MarlError::Shape(e.to_string()))?;
                    let (y, cache) = head.forward(&x)?;
                    q.push(y);
                    caches.push(cache);
                }
                Ok((q, CriticCache::Heads(caches)))
            }
            Critic::Local(heads) => {
                let mut q = Vec::with_capacity(kinds.len());
                let mut caches = Vec::with_capacity(kinds.len());
                for (j, head) in heads.iter().enumerate() {
                    let (y, cache) = head.forward(&obs[j])?;
                    q.push(y);
                    caches.push(cache);
                }
                Ok((q, CriticCache::Heads(caches)))
            }
        }
    }

    /// Parameter gradients for upstream gradients `d_q[j]` on the Q-vectors.
    pub fn backward(&self, cache: &CriticCache<S>, d_q: &[Array2<S>]) -> Result<Critic<S>, MarlError> {
        match (self, cache) {
            (Critic::Attention(c), CriticCache::Attention { sa, obs, attention, heads }) => {
                let agents = c.heads.len();
                if d_q.len() != agents || heads.len() != agents {
                    return Err(MarlError::Shape("critic gradient has the wrong agent count".into()));
                }
                let e = c.obs[0].output_dim();
                let mut g_heads = Vec::with_capacity(agents);
                let mut d_query = Vec::with_capacity(agents);
                let mut d_z = Vec::with_capacity(agents);
                for j in 0..agents {
                    let (g, dx) = c.heads[j].backward(&heads[j], &d_q[j])?;
                    g_heads.push(g);
                    d_query.push(dx.slice(s![.., ..e]).to_owned());
                    d_z.push(dx.slice(s![.., e..]).to_owned());
                }
                let (g_att, dq_att, ds_att) = c.attention.backward_all(attention, &d_z)?;
                let mut g_sa = Vec::with_capacity(agents);
                let mut g_obs = Vec::with_capacity(agents);
                for j in 0..agents {
                    g_sa.push(c.sa[j].backward(&sa[j], &ds_att[j])?.0);
                    let d_o = &d_query[j] + &dq_att[j];
                    g_obs.push(c.obs[j].backward(&obs[j], &d_o)?.0);
                }
                Ok(Critic::Attention(AttentionCritic {
                    sa: g_sa,
                    obs: g_obs,
                    attention: g_att,
                    heads: g_heads,
                    mode: c.mode,
                }))
            }
            (Critic::Concat(heads), CriticCache::Heads(caches)) | (Critic::Local(heads), CriticCache::Heads(caches)) => {
                if d_q.len() != heads.len() || caches.len() != heads.len() {
                    return Err(MarlError::Shape("critic gradient has the wrong agent count".into()));
                }
                let grads = heads
                    .iter()
                    .zip(caches)
                    .zip(d_q)
                    .map(|((h, c), d)| h.backward(c, d).map(|(g, _)| g))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(match self {
                    Critic::Concat(_) => Critic::Concat(grads),
                    _ => Critic::Local(grads),
                })
            }
            _ => Err(MarlError::Approx(crate::approx::ApproxError::StaleCache)),
        }
    }
}

impl<S: Scalar> Parameters<S> for Critic<S> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<TensorRef<'a, S>>) {
        match self {
            Critic::Attention(c) => {
                for (j, m) in c.sa.iter().enumerate() {
                    m.collect(&format!("{prefix}sa{j}."), out);
                }
                for (j, m) in c.obs.iter().enumerate() {
                    m.collect(&format!("{prefix}obs{j}."), out);
                }
                c.attention.collect(&format!("{prefix}attention."), out);
                for (j, m) in c.heads.iter().enumerate() {
                    m.collect(&format!("{prefix}q{j}."), out);
                }
            }
            Critic::Concat(heads) | Critic::Local(heads) => {
                for (j, m) in heads.iter().enumerate() {
                    m.collect(&format!("{prefix}q{j}."), out);
                }
            }
        }
    }

    fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [S]>) {
        match self {
            Critic::Attention(c) => {
                c.sa.collect_mut(out);
                c.obs.collect_mut(out);
                c.attention.collect_mut(out);
                c.heads.collect_mut(out);
            }
            Critic::Concat(heads) | Critic::Local(heads) => heads.collect_mut(out),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            Critic::Attention(c) => Critic::Attention(AttentionCritic {
                sa: c.sa.zeros_like(),
                obs: c.obs.zeros_like(),
                attention: c.attention.zeros_like(),
                heads: c.heads.zeros_like(),
                mode: c.mode,
            }),
            Critic::Concat(h) => Critic::Concat(h.zeros_like()),
            Critic::Local(h) => Critic::Local(h.zeros_like()),
        }
    }
}

/// `b(s, a_{-j}) = sum_a pi_j(a | o_j) Q_j(s, (a, a_{-j}))`.
pub fn counterfactual_baseline<S: Scalar>(probs: &[S], q: &[S]) -> S {
    assert_eq!(probs.len(), q.len(), "policy and Q-vector lengths differ");
    probs.iter().zip(q).fold(S::zero(), |acc, (&p, &v)| acc + p * v)
}
