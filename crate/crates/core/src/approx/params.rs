use crate::scalar::Scalar;

/// Read-only view of one named parameter tensor.
pub struct TensorRef<'a, S> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [S],
}

/// A set of learnable tensors. Gradients of a parameter set are stored in a
/// value of the same type, so shapes are congruent by construction.
pub trait Parameters<S: Scalar> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<TensorRef<'a, S>>);
    fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [S]>);
    /// Same shapes, all entries zero.
    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn tensors(&self) -> Vec<TensorRef<'_, S>> {
        let mut out = Vec::new();
        self.collect("", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [S]> {
        let mut out = Vec::new();
        self.collect_mut(&mut out);
        out
    }

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// All entries concatenated in tensor order.
    fn flat(&self) -> Vec<S> {
        self.tensors().iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    /// Overwrites the entry at flat position `index`.
    fn set_flat(&mut self, mut index: usize, value: S) {
        for t in self.tensors_mut() {
            if index < t.len() {
                t[index] = value;
                return;
            }
            index -= t.len();
        }
        panic!("flat parameter index out of range");
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|x| x.is_finite()))
    }

    /// `self += other`.
    fn accumulate(&mut self, other: &Self)
    where
        Self: Sized,
    {
        let src: Vec<Vec<S>> = other.tensors().iter().map(|t| t.data.to_vec()).collect();
        for (dst, src) in self.tensors_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    fn scale(&mut self, factor: S) {
        for t in self.tensors_mut() {
            for x in t.iter_mut() {
                *x *= factor;
            }
        }
    }

    fn squared_norm(&self) -> S {
        self.tensors()
            .iter()
            .flat_map(|t| t.data.iter())
            .fold(S::zero(), |acc, &x| acc + x * x)
    }
}

impl<S: Scalar, P: Parameters<S>> Parameters<S> for Vec<P> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<TensorRef<'a, S>>) {
        for (i, p) in self.iter().enumerate() {
            p.collect(&format!("{prefix}{i}."), out);
        }
    }

    fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [S]>) {
        for p in self.iter_mut() {
            p.collect_mut(out);
        }
    }

    fn zeros_like(&self) -> Self {
        self.iter().map(|p| p.zeros_like()).collect()
    }
}

/// Polyak averaging: `target <- (1 - tau) * target + tau * live`.
pub fn soft_update<S: Scalar, P: Parameters<S>>(target: &mut P, live: &P, tau: S) {
    let src: Vec<Vec<S>> = live.tensors().iter().map(|t| t.data.to_vec()).collect();
    let keep = S::one() - tau;
    for (dst, src) in target.tensors_mut().into_iter().zip(src) {
        assert_eq!(dst.len(), src.len(), "target and live shapes differ");
        for (d, s) in dst.iter_mut().zip(src) {
            *d = if tau == S::one() { s } else { keep * *d + tau * s };
        }
    }
}
