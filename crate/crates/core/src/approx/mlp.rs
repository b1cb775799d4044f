use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::scalar::Scalar;

use super::params::{Parameters, TensorRef};
use super::ApproxError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation<S: Scalar = f64> {
    Identity,
    /// Leaky rectifier with the given negative-side slope.
    LeakyRelu(S),
}

impl<S: Scalar> Activation<S> {
    #[inline]
    pub fn apply(self, x: S) -> S {
        match self {
            Activation::Identity => x,
            Activation::LeakyRelu(slope) => {
                if x > S::zero() {
                    x
                } else {
                    slope * x
                }
            }
        }
    }

    #[inline]
    pub fn derivative(self, x: S) -> S {
        match self {
            Activation::Identity => S::one(),
            Activation::LeakyRelu(slope) => {
                if x > S::zero() {
                    S::one()
                } else {
                    slope
                }
            }
        }
    }
}

/// Fully connected layer computing `act(x W + b)` on row-major batches.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<S: Scalar = f64> {
    /// `inputs x outputs`.
    pub weight: Array2<S>,
    pub bias: Array1<S>,
    pub activation: Activation<S>,
}

impl<S: Scalar> Dense<S> {
    /// Uniform fan-in initialization, zero bias.
    pub fn init<R: Rng>(inputs: usize, outputs: usize, activation: Activation<S>, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        let weight = Array2::from_shape_fn((inputs, outputs), |_| S::lit(rng.gen_range(-bound..bound)));
        Self {
            weight,
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }
}

/// Multi-layer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<S: Scalar = f64> {
    pub layers: Vec<Dense<S>>,
}

/// Activations recorded by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<S: Scalar = f64> {
    inputs: Vec<Array2<S>>,
    pre: Vec<Array2<S>>,
}

impl<S: Scalar> MlpCache<S> {
    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, |x| x.nrows())
    }
}

impl<S: Scalar> Mlp<S> {
    /// `sizes = [in, hidden.., out]`; hidden layers use the leaky rectifier,
    /// the output layer is linear.
    pub fn new<R: Rng>(sizes: &[usize], leaky_slope: S, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Identity
                } else {
                    Activation::LeakyRelu(leaky_slope)
                };
                Dense::init(w[0], w[1], act, rng)
            })
            .collect();
        Self { layers }
    }

    /// Like [`Mlp::new`] but every layer, including the last, is rectified.
    pub fn new_rectified<R: Rng>(sizes: &[usize], leaky_slope: S, rng: &mut R) -> Self {
        let mut m = Self::new(sizes, leaky_slope, rng);
        if let Some(l) = m.layers.last_mut() {
            l.activation = Activation::LeakyRelu(leaky_slope);
        }
        m
    }

    pub fn from_layers(layers: Vec<Dense<S>>) -> Result<Self, ApproxError> {
        if layers.is_empty() {
            return Err(ApproxError::Shape("an MLP needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].outputs() != w[1].inputs() {
                return Err(ApproxError::Shape(format!(
                    "layer sizes do not chain: {} -> {}",
                    w[0].outputs(),
                    w[1].inputs()
                )));
            }
        }
        for l in &layers {
            if l.bias.len() != l.outputs() {
                return Err(ApproxError::Shape("bias length differs from layer width".into()));
            }
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.outputs()));
        s
    }

    /// Batched forward pass over the rows of `x`.
    pub fn forward(&self, x: &Array2<S>) -> Result<(Array2<S>, MlpCache<S>), ApproxError> {
        if x.ncols() != self.input_dim() {
            return Err(ApproxError::Shape(format!(
                "input has {} features, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.clone();
        for layer in &self.layers {
            let z = h.dot(&layer.weight) + &layer.bias;
            let act = layer.activation;
            let out = z.mapv(|v| act.apply(v));
            cache.inputs.push(h);
            cache.pre.push(z);
            h = out;
        }
        Ok((h, cache))
    }

    /// Forward pass without a cache.
    pub fn predict(&self, x: &Array2<S>) -> Result<Array2<S>, ApproxError> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Single-vector convenience wrapper.
    pub fn forward_vec(&self, x: &[S]) -> Result<Vec<S>, ApproxError> {
        let x = Array2::from_shape_vec((1, x.len()), x.to_vec())
            .map_err(|e| ApproxError::Shape(e.to_string()))?;
        Ok(self.predict(&x)?.into_raw_vec_and_offset().0)
    }

    /// Exact gradients given `d_out = dL/d(output)`. Returns parameter
    /// gradients (summed over the batch) and `dL/d(input)`.
    pub fn backward(&self, cache: &MlpCache<S>, d_out: &Array2<S>) -> Result<(Mlp<S>, Array2<S>), ApproxError> {
        if cache.pre.len() != self.layers.len() {
            return Err(ApproxError::StaleCache);
        }
        let mut grads = self.zeros_like();
        let mut delta = d_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[i];
            if z.dim() != delta.dim() {
                return Err(ApproxError::StaleCache);
            }
            let act = layer.activation;
            if act != Activation::Identity {
                ndarray::Zip::from(&mut delta).and(z).for_each(|d, &zv| *d *= act.derivative(zv));
            }
            grads.layers[i].weight = cache.inputs[i].t().dot(&delta);
            grads.layers[i].bias = delta.sum_axis(Axis(0));
            delta = delta.dot(&layer.weight.t());
        }
        Ok((grads, delta))
    }
}

impl<S: Scalar> Parameters<S> for Mlp<S> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<TensorRef<'a, S>>) {
        for (i, l) in self.layers.iter().enumerate() {
            out.push(TensorRef {
                name: format!("{prefix}layer{i}.weight"),
                shape: vec![l.inputs(), l.outputs()],
                data: l.weight.as_slice().expect("standard layout"),
            });
            out.push(TensorRef {
                name: format!("{prefix}layer{i}.bias"),
                shape: vec![l.outputs()],
                data: l.bias.as_slice().expect("standard layout"),
            });
        }
    }

    fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [S]>) {
        for l in self.layers.iter_mut() {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
    }

    fn zeros_like(&self) -> Self {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: Array2::zeros(l.weight.dim()),
                    bias: Array1::zeros(l.bias.len()),
                    activation: l.activation,
                })
                .collect(),
        }
    }
}

