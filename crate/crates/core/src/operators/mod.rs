//! Multilinear dyadic operators and their commutators.

mod commutator;
mod conjugate;
mod haar_sum;

use std::sync::Arc;

use num_complex::Complex64;

use crate::dyadic::{ComplexFunction, DyadicGrid, GridFunction};
use crate::error::Result;
use crate::scalar::Scalar;

pub use commutator::{
    build_iterated_commutator, commutator_single, wrap_commutators, BaseSpec, Commutator, CommutatorSpec,
};
pub use conjugate::{conjugated_family, multiply_slot};
pub use haar_sum::{
    apply_haar_multiplier, apply_paraproduct, Epsilon, HaarMultiplierSpec, HaarSum, HaarSumKind,
    ParaproductSpec,
};

/// An `m`-linear operator on functions of one grid.
///
/// Operators compose lazily: commutators hold their inner operator behind an
/// `Arc` and evaluate it on demand.
pub trait MultilinearOperator: Send + Sync {
    fn arity(&self) -> usize;
    fn grid(&self) -> &DyadicGrid;
    fn apply(&self, inputs: &[&GridFunction]) -> Result<GridFunction>;
    fn apply_complex(&self, inputs: &[&ComplexFunction]) -> Result<ComplexFunction>;

    /// The underlying Haar sum, when the operator is one.
    fn as_haar_sum(&self) -> Option<&HaarSum> {
        None
    }
}

pub type Operator = Arc<dyn MultilinearOperator>;

/// Scalars an operator can be applied to.
pub trait ApplyScalar: Scalar {
    fn apply_with(op: &dyn MultilinearOperator, inputs: &[&GridFunction<Self>]) -> Result<GridFunction<Self>>;
}

impl ApplyScalar for f64 {
    fn apply_with(op: &dyn MultilinearOperator, inputs: &[&GridFunction]) -> Result<GridFunction> {
        op.apply(inputs)
    }
}

impl ApplyScalar for Complex64 {
    fn apply_with(op: &dyn MultilinearOperator, inputs: &[&ComplexFunction]) -> Result<ComplexFunction> {
        op.apply_complex(inputs)
    }
}
