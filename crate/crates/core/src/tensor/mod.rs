//! Dense f64 tensors with reverse-mode differentiation.
//!
//! The tensor is the substrate of every learnable module in this crate:
//! row-major storage, shapes checked at op boundaries, and an optional tape
//! binding that records each operation for the backward pass. Values are
//! immutable once created; optimizers produce fresh tensors instead of
//! mutating in place.

mod checkpoint;
mod linalg;
mod ops;
mod tape;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointEntry};
pub use tape::{backward, Tape};

use std::sync::{Arc, Mutex, Weak};

use rand::Rng;

use crate::error::{Error, Result};
use tape::TapeCore;

struct Inner {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
    grad: Mutex<Option<Vec<f64>>>,
    binding: Mutex<Option<(Weak<TapeCore>, usize)>>,
}

/// Dense n-dimensional array of 64-bit reals. Cloning is cheap (shared
/// storage); the value itself never changes after construction.
#[derive(Clone)]
pub struct Tensor {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad)
            .field(
                "data",
                &if self.len() <= 16 {
                    format!("{:?}", self.inner.data)
                } else {
                    format!("[{} values]", self.len())
                },
            )
            .finish()
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    fn build(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Tensor {
        debug_assert_eq!(numel(&shape), data.len());
        Tensor {
            inner: Arc::new(Inner {
                shape,
                data,
                requires_grad,
                grad: Mutex::new(None),
                binding: Mutex::new(None),
            }),
        }
    }

    /// Internal constructor for op results; shape/data consistency is the
    /// caller's responsibility (debug-asserted).
    pub(crate) fn raw(shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        Tensor::build(shape, data, false)
    }

    /// Checked constructor: validates extents, element count and finiteness.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::Dimension(format!(
                "zero extent in shape {shape:?}"
            )));
        }
        if numel(shape) != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} implies {} elements, got {}",
                numel(shape),
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite value {v} in tensor data"
            )));
        }
        Ok(Tensor::build(shape.to_vec(), data, false))
    }

    /// Checked constructor for a trainable leaf (`requires_grad = true`).
    pub fn param(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        let t = Tensor::from_vec(shape, data)?;
        Ok(Tensor {
            inner: Arc::new(Inner {
                shape: t.inner.shape.clone(),
                data: t.inner.data.clone(),
                requires_grad: true,
                grad: Mutex::new(None),
                binding: Mutex::new(None),
            }),
        })
    }

    /// Trainable leaf with entries drawn uniformly from [-scale, scale].
    pub fn param_uniform(shape: &[usize], scale: f64, rng: &mut impl Rng) -> Tensor {
        let n = numel(shape);
        let data = (0..n)
            .map(|_| rng.random_range(-scale..=scale))
            .collect();
        Tensor::param(shape, data).expect("finite uniform init")
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::build(shape.to_vec(), vec![0.0; numel(shape)], false)
    }

    pub fn ones(shape: &[usize]) -> Tensor {
        Tensor::build(shape.to_vec(), vec![1.0; numel(shape)], false)
    }

    pub fn full(shape: &[usize], value: f64) -> Tensor {
        Tensor::build(shape.to_vec(), vec![value; numel(shape)], false)
    }

    pub fn scalar(value: f64) -> Tensor {
        Tensor::build(vec![1], vec![value], false)
    }

    /// Identity matrix of extent n.
    pub fn eye(n: usize) -> Tensor {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Tensor::build(vec![n, n], data, false)
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.inner.data
    }

    pub fn len(&self) -> usize {
        self.inner.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false // zero extents are rejected at construction
    }

    /// Value of a scalar tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.len(), 1, "item() on non-scalar");
        self.inner.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    pub fn is_finite(&self) -> bool {
        self.inner.data.iter().all(|v| v.is_finite())
    }

    /// Snapshot of the accumulated gradient, if any.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.inner.grad.lock().unwrap().clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.lock().unwrap() = None;
    }

    /// Same values as a fresh constant, detached from any tape.
    pub fn detach(&self) -> Tensor {
        Tensor::build(self.inner.shape.clone(), self.inner.data.clone(), false)
    }

    /// Reverse pass from this scalar; see [`backward`].
    pub fn backward(&self) -> Result<()> {
        tape::backward(self)
    }

    pub(crate) fn accumulate_grad(&self, og: &[f64]) {
        let mut guard = self.inner.grad.lock().unwrap();
        let buf = guard.get_or_insert_with(|| vec![0.0; self.len()]);
        for (d, s) in buf.iter_mut().zip(og) {
            *d += s;
        }
    }

    pub(crate) fn bind(&self, tape: Weak<TapeCore>, node: usize) {
        *self.inner.binding.lock().unwrap() = Some((tape, node));
    }

    /// The live (tape, node) pair, if the recorded tape still exists.
    pub(crate) fn live_binding(&self) -> Option<(Arc<TapeCore>, usize)> {
        let guard = self.inner.binding.lock().unwrap();
        guard
            .as_ref()
            .and_then(|(weak, node)| weak.upgrade().map(|core| (core, *node)))
    }

    /// Node id of this tensor on the given tape, if bound there.
    pub(crate) fn binding_on(&self, core: &Arc<TapeCore>) -> Option<usize> {
        let guard = self.inner.binding.lock().unwrap();
        guard.as_ref().and_then(|(weak, node)| {
            weak.upgrade()
                .filter(|c| Arc::ptr_eq(c, core))
                .map(|_| *node)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_shape_mismatch() {
        let err = Tensor::from_vec(&[2, 3], vec![1.0; 5]).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        let err = Tensor::from_vec(&[2], vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn grad_accumulates_and_resets() {
        let p = Tensor::param(&[2], vec![1.0, 2.0]).unwrap();
        p.accumulate_grad(&[0.5, 0.5]);
        p.accumulate_grad(&[1.0, 0.0]);
        assert_eq!(p.grad().unwrap(), vec![1.5, 0.5]);
        p.zero_grad();
        assert!(p.grad().is_none());
    }

    #[test]
    fn watch_then_backward_on_sum_gives_ones() {
        let tape = Tape::new();
        let p = Tensor::param(&[3], vec![1.0, -2.0, 3.0]).unwrap();
        tape.watch(&p);
        let loss = p.sum_all();
        loss.backward().unwrap();
        assert_eq!(p.grad().unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_twice_accumulates() {
        let tape = Tape::new();
        let p = Tensor::param(&[2], vec![1.0, 2.0]).unwrap();
        tape.watch(&p);
        let loss = p.mul(&p).unwrap().sum_all();
        loss.backward().unwrap();
        loss.backward().unwrap();
        // d/dp sum(p^2) = 2p, doubled by the second pass
        assert_eq!(p.grad().unwrap(), vec![4.0, 8.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let tape = Tape::new();
        let p = Tensor::param(&[2], vec![1.0, 2.0]).unwrap();
        tape.watch(&p);
        let out = p.mul(&p).unwrap();
        assert!(matches!(out.backward(), Err(Error::Contract(_))));
    }

    #[test]
    fn constants_stay_unbound() {
        let tape = Tape::new();
        let p = Tensor::param(&[2], vec![1.0, 2.0]).unwrap();
        tape.watch(&p);
        let c = Tensor::from_vec(&[2], vec![3.0, 4.0]).unwrap();
        let loss = p.mul(&c).unwrap().sum_all();
        loss.backward().unwrap();
        assert_eq!(p.grad().unwrap(), vec![3.0, 4.0]);
        assert!(c.grad().is_none());
    }
}
