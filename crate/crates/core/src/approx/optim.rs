use crate::scalar::{lit, Scalar};

use super::params::Parameters;
use super::ApproxError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind<S: Scalar = f64> {
    /// Plain gradient descent, `p -= lr * g`.
    Sgd,
    /// Adaptive moments with bias correction.
    Adam { beta1: S, beta2: S, eps: S },
}

impl<S: Scalar> OptimizerKind<S> {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: lit(0.9),
            beta2: lit(0.999),
            eps: lit(1e-8),
        }
    }
}

/// Moment accumulators for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<S: Scalar = f64> {
    pub kind: OptimizerKind<S>,
    pub learning_rate: S,
    /// Gradients are rescaled to this global norm when it is exceeded.
    pub max_grad_norm: Option<S>,
    pub step: u64,
    first: Vec<Vec<S>>,
    second: Vec<Vec<S>>,
}

impl<S: Scalar> OptimizerState<S> {
    pub fn new<P: Parameters<S>>(params: &P, kind: OptimizerKind<S>, learning_rate: S) -> Self {
        let zeros: Vec<Vec<S>> = params.tensors().iter().map(|t| vec![S::zero(); t.data.len()]).collect();
        Self {
            kind,
            learning_rate,
            max_grad_norm: None,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn with_max_grad_norm(mut self, norm: Option<S>) -> Self {
        self.max_grad_norm = norm;
        self
    }
}

/// Applies one descent step of `grads` to `params`.
pub fn optimizer_step<S: Scalar, P: Parameters<S>>(
    params: &mut P,
    grads: &P,
    state: &mut OptimizerState<S>,
) -> Result<(), ApproxError> {
    if !grads.all_finite() {
        return Err(ApproxError::Divergence("non-finite gradient".into()));
    }
    let grad_tensors: Vec<Vec<S>> = grads.tensors().iter().map(|t| t.data.to_vec()).collect();
    if grad_tensors.len() != state.first.len()
        || grad_tensors.iter().zip(&state.first).any(|(g, m)| g.len() != m.len())
    {
        return Err(ApproxError::Shape("gradients do not match optimizer state".into()));
    }
    let mut factor = S::one();
    if let Some(max) = state.max_grad_norm {
        let norm = grads.squared_norm().sqrt();
        if norm > max {
            factor = max / norm;
        }
    }
    state.step += 1;
    let lr = state.learning_rate;
    match state.kind {
        OptimizerKind::Sgd => {
            for (p, g) in params.tensors_mut().into_iter().zip(&grad_tensors) {
                for (x, &gv) in p.iter_mut().zip(g) {
                    *x -= lr * gv * factor;
                }
            }
        }
        OptimizerKind::Adam { beta1, beta2, eps } => {
            let t = state.step as i32;
            let c1 = S::one() - beta1.powi(t);
            let c2 = S::one() - beta2.powi(t);
            for (((p, g), m), v) in params
                .tensors_mut()
                .into_iter()
                .zip(&grad_tensors)
                .zip(state.first.iter_mut())
                .zip(state.second.iter_mut())
            {
                for i in 0..p.len() {
                    let gv = g[i] * factor;
                    m[i] = beta1 * m[i] + (S::one() - beta1) * gv;
                    v[i] = beta2 * v[i] + (S::one() - beta2) * gv * gv;
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
    if !params.all_finite() {
        return Err(ApproxError::Divergence("parameters became non-finite".into()));
    }
    Ok(())
}
