//! Minimal differentiable numeric layer.
//!
//! Computations are recorded on a [`Graph`] as vector-valued nodes; weight
//! matrices stay in a [`ParamStore`] and are referenced by id, so building
//! a graph never copies them. [`Graph::backward`] walks the tape in
//! reverse and returns per-parameter gradients as [`Grads`].
//!
//! Everything is generic over [`Scalar`]: `f64` for gradient checking and
//! `f32` for training. [`Dd`] evaluates finite-difference references.

mod adam;
mod attention;
mod dd;
mod gradcheck;
mod graph;
mod gru;
mod params;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use attention::{Attention, AttentionKeys};
pub use dd::Dd;
pub use gradcheck::{gradient_check, GradCheckReport, ParamCheck};
pub use graph::{softmax, softmax_cross_entropy, Graph, NodeId};
pub use gru::{gru_step, run_bidirectional, BiOutput, GruCell};
pub use params::{Grads, ParamId, ParamKind, ParamStore, Parameter};
pub use tensor::Tensor;

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use thiserror::Error;

/// Floating-point element type of tensors and graphs.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Default + Debug + Send + Sync + 'static
{
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every scalar type")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Precision used inside softmax and cross-entropy.
    type Wide: Scalar;

    fn widen(self) -> Self::Wide;

    fn narrow(w: Self::Wide) -> Self;
}

impl Scalar for f32 {
    type Wide = f64;
    fn widen(self) -> f64 {
        self as f64
    }
    fn narrow(w: f64) -> f32 {
        w as f32
    }
}

impl Scalar for f64 {
    type Wide = f64;
    fn widen(self) -> f64 {
        self
    }
    fn narrow(w: f64) -> f64 {
        w
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NnError {
    #[error("{op}: expected length {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0}: empty input sequence")]
    EmptySequence(&'static str),
    #[error("target class {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },
    #[error("backward needs a scalar root, got a node of length {0}")]
    NonScalarRoot(usize),
    #[error("parameter {0:?} declared twice")]
    DuplicateParameter(String),
    #[error("tensor shape {shape:?} does not hold {len} values")]
    ShapeMismatch { shape: Vec<usize>, len: usize },
}

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}
