//! Named parameter tensors and the Adagrad optimizer shared by both models.

use ndarray::{Array, Dimension};

/// A read-only view of one named tensor.
#[derive(Clone, Debug)]
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

impl<'a> TensorRef<'a> {
    /// View of a standard-layout array.
    pub fn of<D: Dimension>(name: impl Into<String>, a: &'a Array<f64, D>) -> TensorRef<'a> {
        TensorRef {
            name: name.into(),
            shape: a.shape().to_vec(),
            data: a.as_slice().expect("standard layout"),
        }
    }
}

/// A fixed, ordered collection of trainable tensors.
///
/// `tensors` and `tensors_mut` must list the same tensors in the same order.
pub trait Tensors {
    fn tensors(&self) -> Vec<TensorRef<'_>>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// `Σ θ²` over every tensor.
    fn squared_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|x| x * x)
            .sum()
    }

    fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }
}

/// Per-coordinate adaptive gradient descent:
/// `acc += g²; θ -= lr · g / (√acc + eps)`.
#[derive(Clone, Debug)]
pub struct Adagrad {
    pub learning_rate: f64,
    pub eps: f64,
    acc: Vec<Vec<f64>>,
}

impl Adagrad {
    pub fn new<P: Tensors>(params: &P, learning_rate: f64, eps: f64) -> Adagrad {
        Adagrad {
            learning_rate,
            eps,
            acc: params.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect(),
        }
    }

    pub fn step<P: Tensors>(&mut self, params: &mut P, grads: &P) {
        let lr = self.learning_rate;
        if lr == 0.0 {
            return;
        }
        let eps = self.eps;
        let grads = grads.tensors();
        for ((theta, g), acc) in params.tensors_mut().into_iter().zip(&grads).zip(&mut self.acc) {
            debug_assert_eq!(theta.len(), g.data.len());
            for ((w, &g), a) in theta.iter_mut().zip(g.data).zip(acc.iter_mut()) {
                *a += g * g;
                *w -= lr * g / (a.sqrt() + eps);
            }
        }
    }
}
