use indexmap::IndexMap;
use rand::Rng;

use crate::error::{Result, TensorError};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Named trainable tensors in a fixed insertion order.
///
/// The order is part of the checkpoint format and of the optimizer state
/// layout, so parameters must always be registered in the same sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T> {
    params: IndexMap<String, Tensor<T>>,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            params: IndexMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>) -> Result<()> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return Err(TensorError::DuplicateParam(name));
        }
        self.params.insert(name, value);
        Ok(())
    }

    /// Registers a `[rows, cols]` matrix drawn uniformly from
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn insert_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut R,
    ) -> Result<()> {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let value = Tensor::from_fn(rows, cols, |_, _| T::of(rng.gen_range(-bound..=bound)));
        self.insert(name, value)
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.params
            .get(name)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        self.params
            .get_mut(name)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.get_index_of(name)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn values(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.params.values()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.params.values_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn num_values(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    /// Records every parameter as a trainable leaf on `tape`.
    pub fn bind<'a>(&'a self, tape: &mut Tape<T>) -> Bound<'a, T> {
        let vars = self.params.values().map(|v| tape.param(v.clone())).collect();
        Bound { store: self, vars }
    }

    /// Records every parameter as a constant; nothing will be trainable.
    pub fn bind_frozen<'a>(&'a self, tape: &mut Tape<T>) -> Bound<'a, T> {
        let vars = self.params.values().map(|v| tape.constant(v.clone())).collect();
        Bound { store: self, vars }
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), v.cast()))
                .collect(),
        }
    }
}

/// A parameter store's tensors as they appear on one tape.
#[derive(Debug)]
pub struct Bound<'a, T> {
    store: &'a ParamStore<T>,
    vars: Vec<Var>,
}

impl<T: Scalar> Bound<'_, T> {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.store
            .index_of(name)
            .map(|i| self.vars[i])
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Gradients for every parameter in store order; parameters the output
    /// did not depend on get zeros.
    pub fn grads(&self, tape: &Tape<T>) -> Vec<Tensor<T>> {
        self.vars
            .iter()
            .zip(self.store.values())
            .map(|(&v, p)| tape.grad(v).unwrap_or_else(|| Tensor::zeros(p.shape())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::<f64>::new();
        store.insert_uniform("w", 16, 8, 16, &mut rng).unwrap();
        let w = store.get("w").unwrap();
        assert!(w.data().iter().all(|v| v.abs() <= 0.25));
        assert!(w.data().iter().any(|v| v.abs() > 0.1));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut store = ParamStore::<f32>::new();
        store.insert("a", Tensor::zeros(&[1])).unwrap();
        assert!(matches!(
            store.insert("a", Tensor::zeros(&[1])),
            Err(TensorError::DuplicateParam(_))
        ));
    }

    #[test]
    fn unused_params_get_zero_grads() {
        let mut store = ParamStore::<f64>::new();
        store.insert("used", Tensor::row(vec![2.0])).unwrap();
        store.insert("unused", Tensor::row(vec![5.0, 6.0])).unwrap();
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let u = bound.var("used").unwrap();
        let y = tape.mul(u, u).unwrap();
        tape.backward(y).unwrap();
        let grads = bound.grads(&tape);
        assert_eq!(grads[0].data(), &[4.0]);
        assert_eq!(grads[1].data(), &[0.0, 0.0]);
    }
}
