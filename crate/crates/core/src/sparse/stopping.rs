use fixedbitset::FixedBitSet;

use crate::dyadic::{Cube, DyadicGrid};
use crate::error::{domain, Result};

/// Maximal dyadic `P ⊆ q0` with `|P ∩ E| > λ|P|`.
///
/// `e` is a bitset over all leaves of the grid (storage order) and must lie
/// inside `q0`.
pub fn cz_stopping_cubes(grid: &DyadicGrid, e: &FixedBitSet, q0: &Cube, lambda: f64) -> Result<Vec<Cube>> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(domain(format!("stopping level {lambda} outside (0, 1)")));
    }
    grid.check(q0)?;
    let range = grid.leaf_range(q0);
    if e.ones().any(|i| !range.contains(&i)) {
        return Err(domain(format!("set is not contained in cube {q0}")));
    }
    let mut local = FixedBitSet::with_capacity(range.len());
    for i in e.ones() {
        local.insert(i - range.start);
    }
    Ok(cz_stopping_local(grid, &local, q0, lambda))
}

/// Same as [`cz_stopping_cubes`] with `e` given over the leaves of `q0`.
pub(crate) fn cz_stopping_local(grid: &DyadicGrid, e: &FixedBitSet, q0: &Cube, lambda: f64) -> Vec<Cube> {
    let range = grid.leaf_range(q0);
    // prefix counts over the leaves of q0; every sub-cube is a contiguous run
    let mut prefix = Vec::with_capacity(range.len() + 1);
    prefix.push(0usize);
    let mut acc = 0;
    for i in 0..range.len() {
        acc += usize::from(e.contains(i));
        prefix.push(acc);
    }
    let mut out = Vec::new();
    let mut stack = vec![*q0];
    while let Some(p) = stack.pop() {
        let r = grid.leaf_range(&p);
        let count = prefix[r.end - range.start] - prefix[r.start - range.start];
        if count == 0 {
            continue;
        }
        if count as f64 > lambda * r.len() as f64 {
            out.push(p);
        } else if p.level() < grid.depth() {
            stack.extend(p.children());
        }
    }
    out.sort();
    out
}
