//! Skip-gram negative-sampling update kernel.
//!
//! For a center word `c`, an observed context word `o` and negatives `n_1..n_k`
//! the per-pair loss is
//!
//! ```text
//! L = -log σ(in_c · out_o) - Σ_i log σ(-in_c · out_{n_i})
//! ```
//!
//! [`sgns_step`] applies one SGD step on `L` and returns the loss evaluated
//! before the step. Output rows are updated as each target is visited; the
//! center row receives its accumulated gradient at the end, so when every
//! target row is distinct the step equals `-lr * ∇L` exactly.

use std::sync::atomic::{AtomicU32, Ordering};

use num_traits::Float;

/// Row-wise access to an embedding matrix.
pub trait RowAccess<T> {
    fn dim(&self) -> usize;
    fn read(&self, row: usize, out: &mut [T]);
    fn add(&mut self, row: usize, delta: &[T]);
}

/// Exclusive access to a dense row-major matrix.
pub struct DenseRows<'a, T> {
    data: &'a mut [T],
    dim: usize,
}

impl<'a, T> DenseRows<'a, T> {
    pub fn new(data: &'a mut [T], dim: usize) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "matrix is not row-aligned");
        Self { data, dim }
    }
}

impl<T: Float> RowAccess<T> for DenseRows<'_, T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn read(&self, row: usize, out: &mut [T]) {
        out.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn add(&mut self, row: usize, delta: &[T]) {
        let r = &mut self.data[row * self.dim..(row + 1) * self.dim];
        for (x, d) in r.iter_mut().zip(delta) {
            *x = *x + *d;
        }
    }
}

/// f32 matrix shared between training threads. Reads and writes are relaxed
/// atomics per element; concurrent updates to the same row may be lost
/// (Hogwild), which SGD tolerates.
pub struct AtomicRows {
    data: Vec<AtomicU32>,
    dim: usize,
}

impl AtomicRows {
    pub fn from_vec(values: Vec<f32>, dim: usize) -> Self {
        assert!(dim > 0 && values.len().is_multiple_of(dim), "matrix is not row-aligned");
        Self {
            data: values.into_iter().map(|v| AtomicU32::new(v.to_bits())).collect(),
            dim,
        }
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
            .into_iter()
            .map(|a| f32::from_bits(a.into_inner()))
            .collect()
    }
}

impl RowAccess<f32> for &AtomicRows {
    fn dim(&self) -> usize {
        self.dim
    }

    fn read(&self, row: usize, out: &mut [f32]) {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        for (o, a) in out.iter_mut().zip(r) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add(&mut self, row: usize, delta: &[f32]) {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        for (a, d) in r.iter().zip(delta) {
            let v = f32::from_bits(a.load(Ordering::Relaxed)) + d;
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

/// Reusable buffers for [`sgns_step`].
#[derive(Debug, Clone)]
pub struct Scratch<T> {
    center: Vec<T>,
    target: Vec<T>,
    center_grad: Vec<T>,
    delta: Vec<T>,
}

impl<T: Float> Scratch<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            center: vec![T::zero(); dim],
            target: vec![T::zero(); dim],
            center_grad: vec![T::zero(); dim],
            delta: vec![T::zero(); dim],
        }
    }
}

pub fn sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `-log σ(x)`, stable for large |x|.
pub fn neg_log_sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// One SGD step for the pair `(center, context)` with the given negatives.
/// Returns the pair loss before the update.
#[allow(clippy::too_many_arguments)]
pub fn sgns_step<T, I, O>(
    input: &mut I,
    output: &mut O,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: T,
    scratch: &mut Scratch<T>,
) -> T
where
    T: Float,
    I: RowAccess<T>,
    O: RowAccess<T>,
{
    input.read(center, &mut scratch.center);
    scratch.center_grad.iter_mut().for_each(|g| *g = T::zero());
    let mut loss = T::zero();
    let targets = std::iter::once((context, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (target, positive) in targets {
        output.read(target, &mut scratch.target);
        let score = dot(&scratch.center, &scratch.target);
        // g = (label - σ(score)); descent direction on L.
        let g = if positive {
            loss = loss + neg_log_sigmoid(score);
            T::one() - sigmoid(score)
        } else {
            loss = loss + neg_log_sigmoid(-score);
            -sigmoid(score)
        };
        for ((cg, t), (d, c)) in scratch
            .center_grad
            .iter_mut()
            .zip(&scratch.target)
            .zip(scratch.delta.iter_mut().zip(&scratch.center))
        {
            *cg = *cg + g * *t;
            *d = lr * g * *c;
        }
        output.add(target, &scratch.delta);
    }
    for (d, cg) in scratch.delta.iter_mut().zip(&scratch.center_grad) {
        *d = lr * *cg;
    }
    input.add(center, &scratch.delta);
    loss
}

fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}
