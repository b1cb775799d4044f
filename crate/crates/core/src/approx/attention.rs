//! Multi-head bilinear attention over the other agents' embeddings.
//!
//! For agent `j` and head `h` the logit of another agent `l` is
//! `(e_l U_k) . (e_j V_q) / sqrt(d_k)`; the weights are the normalized
//! exponentials of the logits over `l != j`, and the head output is
//! `sum_l w_l * leaky(e_l T_s)`. Head outputs are concatenated.

use ndarray::{Array2, ArrayView1};
use rand::Rng;

use crate::scalar::Scalar;

use super::params::{Parameters, TensorRef};
use super::ApproxError;

/// How attention weights are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    #[default]
    Learned,
    /// Every other agent gets `1 / (N - 1)`; keys and queries are unused.
    Uniform,
}

/// One head: key map `U_k`, query map `V_q`, value map `T_s`, each stored
/// as `embed x dim` so that `e U` is a row-vector product.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionHead<S: Scalar = f64> {
    pub key: Array2<S>,
    pub query: Array2<S>,
    pub value: Array2<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<S: Scalar = f64> {
    pub heads: Vec<AttentionHead<S>>,
    pub leaky_slope: S,
}

impl<S: Scalar> AttentionParams<S> {
    pub fn new<R: Rng>(
        heads: usize,
        embed_dim: usize,
        key_dim: usize,
        value_dim: usize,
        leaky_slope: S,
        rng: &mut R,
    ) -> Result<Self, ApproxError> {
        if heads == 0 {
            return Err(ApproxError::Shape("attention needs at least one head".into()));
        }
        let bound = 1.0 / (embed_dim.max(1) as f64).sqrt();
        let mut mat = |cols: usize| {
            Array2::from_shape_fn((embed_dim, cols), |_| S::lit(rng.gen_range(-bound..bound)))
        };
        let heads = (0..heads)
            .map(|_| AttentionHead {
                key: mat(key_dim),
                query: mat(key_dim),
                value: mat(value_dim),
            })
            .collect();
        Ok(Self { heads, leaky_slope })
    }

    pub fn head_count(&self) -> usize {
        self.heads.len()
    }

    pub fn embed_dim(&self) -> usize {
        self.heads[0].key.nrows()
    }

    pub fn key_dim(&self) -> usize {
        self.heads[0].key.ncols()
    }

    pub fn value_dim(&self) -> usize {
        self.heads[0].value.ncols()
    }

    /// Width of the concatenated contribution vector.
    pub fn output_dim(&self) -> usize {
        self.head_count() * self.value_dim()
    }

    fn leaky(&self, x: S) -> S {
        if x > S::zero() {
            x
        } else {
            self.leaky_slope * x
        }
    }

    fn leaky_grad(&self, x: S) -> S {
        if x > S::zero() {
            S::one()
        } else {
            self.leaky_slope
        }
    }
}

/// Normalized exponentials with the maximum subtracted.
pub fn softmax<S: Scalar>(logits: &[S]) -> Vec<S> {
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: S = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn row_dot<S: Scalar>(a: ArrayView1<S>, b: ArrayView1<S>) -> S {
    a.iter().zip(b.iter()).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

fn vec_times<S: Scalar>(v: &[S], m: &Array2<S>) -> Vec<S> {
    (0..m.ncols())
        .map(|c| v.iter().enumerate().fold(S::zero(), |acc, (r, &x)| acc + x * m[[r, c]]))
        .collect()
}

/// Weights one head assigns to `keys` (embeddings of the other agents) for
/// the querying embedding `query`.
pub fn attention_weights<S: Scalar>(query: &[S], keys: &[&[S]], head: &AttentionHead<S>) -> Vec<S> {
    let q = vec_times(query, &head.query);
    let scale = S::one() / S::lit(head.key.ncols() as f64).sqrt();
    let logits: Vec<S> = keys
        .iter()
        .map(|e| {
            let k = vec_times(e, &head.key);
            k.iter().zip(&q).fold(S::zero(), |acc, (&a, &b)| acc + a * b) * scale
        })
        .collect();
    softmax(&logits)
}

/// Contribution vector of agent `j`: per head, the weighted sum of the
/// rectified value transforms of every other agent, heads concatenated.
/// `queries[j]` is agent j's own query embedding, `sources[l]` the
/// state-action embedding of agent l.
pub fn attention_contribution<S: Scalar>(
    j: usize,
    queries: &[Vec<S>],
    sources: &[Vec<S>],
    params: &AttentionParams<S>,
    mode: WeightMode,
) -> Result<Vec<S>, ApproxError> {
    let n = sources.len();
    if n < 2 || j >= n || queries.len() != n {
        return Err(ApproxError::Shape(format!(
            "attention needs >= 2 agents and agent {j} in range (got {n})"
        )));
    }
    let others: Vec<&[S]> = (0..n).filter(|&l| l != j).map(|l| sources[l].as_slice()).collect();
    let mut out = Vec::with_capacity(params.output_dim());
    for head in &params.heads {
        let w = match mode {
            WeightMode::Learned => attention_weights(&queries[j], &others, head),
            WeightMode::Uniform => vec![S::one() / S::lit((n - 1) as f64); n - 1],
        };
        let mut z = vec![S::zero(); head.value.ncols()];
        for (wl, e) in w.iter().zip(&others) {
            for (zc, v) in z.iter_mut().zip(vec_times(e, &head.value)) {
                *zc += *wl * params.leaky(v);
            }
        }
        out.extend(z);
    }
    Ok(out)
}

/// Intermediate values of [`AttentionParams::forward_all`].
#[derive(Debug, Clone)]
pub struct AttentionCache<S: Scalar = f64> {
    mode: WeightMode,
    queries_in: Vec<Array2<S>>,
    sources_in: Vec<Array2<S>>,
    /// `[head][agent]` projected queries, `n x d_k`.
    q: Vec<Vec<Array2<S>>>,
    /// `[head][agent]` projected keys, `n x d_k`.
    k: Vec<Vec<Array2<S>>>,
    /// `[head][agent]` value pre-activations, `n x d_v`.
    u: Vec<Vec<Array2<S>>>,
    /// `[head][agent]` rectified values, `n x d_v`.
    v: Vec<Vec<Array2<S>>>,
    /// `[head][agent j]` weights, `n x (N - 1)`, other agents in index order.
    w: Vec<Vec<Array2<S>>>,
}

impl<S: Scalar> AttentionCache<S> {
    /// Weights of head `head` for agent `j`, one row per batch sample.
    pub fn weights(&self, head: usize, j: usize) -> &Array2<S> {
        &self.w[head][j]
    }

    pub fn head_count(&self) -> usize {
        self.w.len()
    }

    pub fn agent_count(&self) -> usize {
        self.sources_in.len()
    }
}

impl<S: Scalar> AttentionParams<S> {
    /// Batched contributions for every agent at once. `queries[j]` and
    /// `sources[j]` are `n x embed` matrices.
    pub fn forward_all(
        &self,
        queries: &[Array2<S>],
        sources: &[Array2<S>],
        mode: WeightMode,
    ) -> Result<(Vec<Array2<S>>, AttentionCache<S>), ApproxError> {
        let agents = sources.len();
        if agents < 2 || queries.len() != agents {
            return Err(ApproxError::Shape(format!(
                "attention needs >= 2 agents with one query each (got {agents} sources, {} queries)",
                queries.len()
            )));
        }
        let n = sources[0].nrows();
        for m in queries.iter().chain(sources) {
            if m.nrows() != n || m.ncols() != self.embed_dim() {
                return Err(ApproxError::Shape("attention embeddings have inconsistent shapes".into()));
            }
        }
        let dv = self.value_dim();
        let scale = S::one() / S::lit(self.key_dim() as f64).sqrt();
        let uniform = S::one() / S::lit((agents - 1) as f64);
        let mut cache = AttentionCache {
            mode,
            queries_in: queries.to_vec(),
            sources_in: sources.to_vec(),
            q: Vec::new(),
            k: Vec::new(),
            u: Vec::new(),
            v: Vec::new(),
            w: Vec::new(),
        };
        let mut z: Vec<Array2<S>> = (0..agents).map(|_| Array2::zeros((n, self.output_dim()))).collect();
        for (h, head) in self.heads.iter().enumerate() {
            let u: Vec<Array2<S>> = sources.iter().map(|e| e.dot(&head.value)).collect();
            let v: Vec<Array2<S>> = u.iter().map(|x| x.mapv(|y| self.leaky(y))).collect();
            let (q, k): (Vec<Array2<S>>, Vec<Array2<S>>) = match mode {
                WeightMode::Learned => (
                    queries.iter().map(|e| e.dot(&head.query)).collect(),
                    sources.iter().map(|e| e.dot(&head.key)).collect(),
                ),
                WeightMode::Uniform => (Vec::new(), Vec::new()),
            };
            let mut weights = Vec::with_capacity(agents);
            for j in 0..agents {
                let mut w = Array2::zeros((n, agents - 1));
                for s in 0..n {
                    let row: Vec<S> = match mode {
                        WeightMode::Learned => {
                            let logits: Vec<S> = (0..agents)
                                .filter(|&l| l != j)
                                .map(|l| row_dot(k[l].row(s), q[j].row(s)) * scale)
                                .collect();
                            softmax(&logits)
                        }
                        WeightMode::Uniform => vec![uniform; agents - 1],
                    };
                    for (c, (wl, l)) in row.iter().zip((0..agents).filter(|&l| l != j)).enumerate() {
                        w[[s, c]] = *wl;
                        for d in 0..dv {
                            z[j][[s, h * dv + d]] += *wl * v[l][[s, d]];
                        }
                    }
                }
                weights.push(w);
            }
            cache.q.push(q);
            cache.k.push(k);
            cache.u.push(u);
            cache.v.push(v);
            cache.w.push(weights);
        }
        Ok((z, cache))
    }

    /// Backward pass of [`AttentionParams::forward_all`] for upstream
    /// gradients `dz[j]`. Returns parameter gradients and the gradients with
    /// respect to every query and source embedding.
    pub fn backward_all(
        &self,
        cache: &AttentionCache<S>,
        dz: &[Array2<S>],
    ) -> Result<(AttentionParams<S>, Vec<Array2<S>>, Vec<Array2<S>>), ApproxError> {
        let agents = cache.sources_in.len();
        if dz.len() != agents || cache.w.len() != self.heads.len() {
            return Err(ApproxError::StaleCache);
        }
        let n = cache.sources_in[0].nrows();
        let dv = self.value_dim();
        let dk = self.key_dim();
        let scale = S::one() / S::lit(dk as f64).sqrt();
        let mut grads = self.zeros_like();
        let mut d_queries: Vec<Array2<S>> = cache.queries_in.iter().map(|m| Array2::zeros(m.dim())).collect();
        let mut d_sources: Vec<Array2<S>> = cache.sources_in.iter().map(|m| Array2::zeros(m.dim())).collect();

        for (h, head) in self.heads.iter().enumerate() {
            let v = &cache.v[h];
            let mut d_v: Vec<Array2<S>> = (0..agents).map(|_| Array2::zeros((n, dv))).collect();
            let mut d_q: Vec<Array2<S>> = (0..agents).map(|_| Array2::zeros((n, dk))).collect();
            let mut d_k: Vec<Array2<S>> = (0..agents).map(|_| Array2::zeros((n, dk))).collect();
            for j in 0..agents {
                let w = &cache.w[h][j];
                for s in 0..n {
                    let g = dz[j].row(s);
                    let g = g.slice(ndarray::s![h * dv..(h + 1) * dv]);
                    let others: Vec<usize> = (0..agents).filter(|&l| l != j).collect();
                    let mut d_w = vec![S::zero(); others.len()];
                    for (c, &l) in others.iter().enumerate() {
                        let wl = w[[s, c]];
                        for d in 0..dv {
                            d_v[l][[s, d]] += wl * g[d];
                        }
                        d_w[c] = row_dot(g, v[l].row(s));
                    }
                    if cache.mode == WeightMode::Uniform {
                        continue;
                    }
                    let mean: S = (0..others.len()).fold(S::zero(), |acc, c| acc + w[[s, c]] * d_w[c]);
                    for (c, &l) in others.iter().enumerate() {
                        let d_logit = w[[s, c]] * (d_w[c] - mean) * scale;
                        for d in 0..dk {
                            let qv = cache.q[h][j][[s, d]];
                            let kv = cache.k[h][l][[s, d]];
                            d_q[j][[s, d]] += d_logit * kv;
                            d_k[l][[s, d]] += d_logit * qv;
                        }
                    }
                }
            }
            let gh = &mut grads.heads[h];
            for l in 0..agents {
                let mut du = d_v[l].clone();
                ndarray::Zip::from(&mut du)
                    .and(&cache.u[h][l])
                    .for_each(|x, &u| *x *= self.leaky_grad(u));
                let src = &cache.sources_in[l];
                gh.value += &src.t().dot(&du);
                d_sources[l] += &du.dot(&head.value.t());
                if cache.mode == WeightMode::Learned {
                    gh.key += &src.t().dot(&d_k[l]);
                    d_sources[l] += &d_k[l].dot(&head.key.t());
                    gh.query += &cache.queries_in[l].t().dot(&d_q[l]);
                    d_queries[l] += &d_q[l].dot(&head.query.t());
                }
            }
        }
        Ok((grads, d_queries, d_sources))
    }
}

impl<S: Scalar> Parameters<S> for AttentionParams<S> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<TensorRef<'a, S>>) {
        for (h, head) in self.heads.iter().enumerate() {
            for (name, m) in [("key", &head.key), ("query", &head.query), ("value", &head.value)] {
                out.push(TensorRef {
                    name: format!("{prefix}head{h}.{name}"),
                    shape: vec![m.nrows(), m.ncols()],
                    data: m.as_slice().expect("standard layout"),
                });
            }
        }
    }

    fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [S]>) {
        for head in self.heads.iter_mut() {
            out.push(head.key.as_slice_mut().expect("standard layout"));
            out.push(head.query.as_slice_mut().expect("standard layout"));
            out.push(head.value.as_slice_mut().expect("standard layout"));
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            heads: self
                .heads
                .iter()
                .map(|h| AttentionHead {
                    key: Array2::zeros(h.key.dim()),
                    query: Array2::zeros(h.query.dim()),
                    value: Array2::zeros(h.value.dim()),
                })
                .collect(),
            leaky_slope: self.leaky_slope,
        }
    }
}

