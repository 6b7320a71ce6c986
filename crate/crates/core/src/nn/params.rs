use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, NnError, Scalar, Tensor};

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Decides how a parameter is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// `[out, in]` weight matrix, Glorot-uniform.
    Matrix,
    /// Zero-initialized offset vector.
    Bias,
    /// `[vocab, dim]` lookup table, uniform in +-0.1.
    Embedding,
    /// Free vector (attention scoring vectors), Glorot-uniform over its length.
    Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T> {
    pub name: String,
    pub kind: ParamKind,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

/// Named, ordered collection of trainable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Parameter<T>>,
    by_name: HashMap<String, ParamId>,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        ParamStore {
            params: Vec::new(),
            by_name: HashMap::new(),
        }
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, shape: Vec<usize>, kind: ParamKind) -> Result<ParamId, NnError> {
        if self.by_name.contains_key(name) {
            return Err(NnError::DuplicateParameter(name.to_string()));
        }
        let id = ParamId(self.params.len());
        self.params.push(Parameter {
            name: name.to_string(),
            kind,
            value: Tensor::zeros(shape.clone()),
            grad: Tensor::zeros(shape),
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total scalar count over all parameters.
    pub fn num_elements(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor<T> {
        &self.params[id.0].value
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<T>> {
        self.params.iter_mut()
    }

    /// Deterministic initialization: Glorot-uniform matrices
    /// (`+-sqrt(6 / (fan_in + fan_out))`), zero biases, embeddings in +-0.1.
    pub fn init(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut self.params {
            let limit = match p.kind {
                ParamKind::Bias => {
                    p.value.fill(T::zero());
                    continue;
                }
                ParamKind::Embedding => 0.1,
                ParamKind::Matrix => {
                    let shape = p.value.shape();
                    let (fan_out, fan_in) = (shape[0], shape[1]);
                    (6.0 / (fan_in + fan_out) as f64).sqrt()
                }
                ParamKind::Vector => (6.0 / (p.value.len() + 1) as f64).sqrt(),
            };
            for x in p.value.data_mut() {
                *x = T::of(rng.random_range(-limit..=limit));
            }
        }
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(T::zero());
        }
    }

    /// Adds `scale * grads` into the stored gradients.
    pub fn accumulate(&mut self, grads: &Grads<T>, scale: T) {
        for (p, g) in self.params.iter_mut().zip(&grads.slots) {
            if let Some(g) = g {
                axpy(p.grad.data_mut(), scale, g);
            }
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.params
            .iter()
            .flat_map(|p| p.grad.data())
            .map(|g| g.f64() * g.f64())
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales all gradients so their global L2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let s = T::of(max_norm / norm);
            for p in &mut self.params {
                p.grad.data_mut().iter_mut().for_each(|g| *g *= s);
            }
        }
        norm
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Parameter {
                    name: p.name.clone(),
                    kind: p.kind,
                    value: p.value.cast(),
                    grad: p.grad.cast(),
                })
                .collect(),
            by_name: self.by_name.clone(),
        }
    }

    /// Copies values (not gradients) from a store with the same layout.
    /// Overwrites values with `other`'s, converting through `f64`.
    pub fn copy_values_from<U: Scalar>(&mut self, other: &ParamStore<U>) {
        for (dst, src) in self.params.iter_mut().zip(&other.params) {
            for (d, s) in dst.value.data_mut().iter_mut().zip(src.value.data()) {
                *d = T::of(s.f64());
            }
        }
    }
}

/// Sparse per-parameter gradient buffers produced by one backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<T> {
    slots: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Grads<T> {
    pub fn new(num_params: usize) -> Self {
        Grads {
            slots: vec![None; num_params],
        }
    }

    pub fn for_store(store: &ParamStore<T>) -> Self {
        Self::new(store.len())
    }

    pub fn get(&self, id: ParamId) -> Option<&[T]> {
        self.slots[id.0].as_deref()
    }

    pub(crate) fn slot(&mut self, id: ParamId, len: usize) -> &mut [T] {
        self.slots[id.0].get_or_insert_with(|| vec![T::zero(); len])
    }

    /// Element-wise `self += other`.
    pub fn add_assign(&mut self, other: &Grads<T>) {
        for (mine, theirs) in self.slots.iter_mut().zip(&other.slots) {
            if let Some(theirs) = theirs {
                match mine {
                    Some(m) => axpy(m, T::one(), theirs),
                    None => *mine = Some(theirs.clone()),
                }
            }
        }
    }
}
