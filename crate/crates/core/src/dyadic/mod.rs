//! Dyadic grids, grid functions, the Haar system and basic norms.

mod function;
mod grid;
mod haar;
mod norms;

pub use function::{AnyGridFunction, ComplexFunction, GridFunction};
pub use grid::{Cube, DyadicGrid, HaarIndex, MAX_LEAF_BITS};
pub use haar::{haar_coefficient, haar_coefficients, haar_function, haar_levels, haar_synthesis};
pub(crate) use haar::coefficients_from_pyramid;
pub use norms::{average, dyadic_maximal, lp_norm, weak_lp_norm};
