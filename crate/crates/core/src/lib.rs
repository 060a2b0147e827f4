//! Multilinear dyadic operators, their commutators, sparse domination and
//! two-weight inequalities on finite dyadic grids.

pub mod dyadic;
mod error;
pub mod operators;
pub mod sparse;
pub mod verify;
pub mod weights;
mod scalar;

pub use dyadic::{Cube, DyadicGrid, GridFunction, HaarIndex};
pub use error::{Error, Result};
pub use scalar::Scalar;
