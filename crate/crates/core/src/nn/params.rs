use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// Named trainable tensors, in creation order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<F> {
    names: Vec<String>,
    tensors: Vec<Tensor<F>>,
}

impl<F: Scalar> Default for ParamStore<F> {
    fn default() -> Self {
        Self { names: Vec::new(), tensors: Vec::new() }
    }
}

impl<F: Scalar> ParamStore<F> {
    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor<F>) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    /// Uniform in ±sqrt(6 / (rows + cols)).
    pub fn add_glorot(&mut self, name: impl Into<String>, rows: usize, cols: usize, rng: &mut impl Rng) -> ParamId {
        let a = libm::sqrt(6.0 / (rows + cols) as f64);
        let data = (0..rows * cols).map(|_| F::of(rng.gen_range(-a..a))).collect();
        self.add(name, Tensor::from_vec(rows, cols, data))
    }

    pub fn add_uniform(&mut self, name: impl Into<String>, rows: usize, cols: usize, a: f64, rng: &mut impl Rng) -> ParamId {
        let data = (0..rows * cols).map(|_| F::of(rng.gen_range(-a..a))).collect();
        self.add(name, Tensor::from_vec(rows, cols, data))
    }

    pub fn add_constant(&mut self, name: impl Into<String>, rows: usize, cols: usize, value: f64) -> ParamId {
        self.add(name, Tensor::from_vec(rows, cols, alloc::vec![F::of(value); rows * cols]))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<F> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    /// Same parameters in another precision.
    pub fn cast<G: Scalar>(&self) -> ParamStore<G> {
        ParamStore {
            names: self.names.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::from_vec(t.rows, t.cols, t.data.iter().map(|x| G::of(x.as_f64())).collect()))
                .collect(),
        }
    }
}

/// Gradients laid out like a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<F> {
    pub tensors: Vec<Tensor<F>>,
}

impl<F: Scalar> Grads<F> {
    pub fn zeros_like(store: &ParamStore<F>) -> Self {
        Self { tensors: store.tensors.iter().map(|t| Tensor::zeros(t.rows, t.cols)).collect() }
    }

    pub fn get(&self, id: ParamId) -> &Tensor<F> {
        &self.tensors[id.0]
    }

    pub fn add(&mut self, other: &Grads<F>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: F) {
        for t in &mut self.tensors {
            for x in &mut t.data {
                *x = *x * s;
            }
        }
    }

    pub fn global_norm(&self) -> F {
        let mut s = F::zero();
        for t in &self.tensors {
            for &x in &t.data {
                s += x * x;
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|x| x.is_finite()))
    }
}
