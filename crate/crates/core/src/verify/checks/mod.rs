pub mod bloom;
pub mod cauchy;
pub mod conjugation;
pub mod domination;
pub mod lower_bound;
pub mod maximal;

use crate::dyadic::GridFunction;

/// Pointwise minimum of `f`.
pub(crate) fn min_value(f: &GridFunction) -> f64 {
    f.values().iter().copied().fold(f64::INFINITY, f64::min)
}
