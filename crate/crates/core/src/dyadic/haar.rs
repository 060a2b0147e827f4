//! Haar functions, single coefficients, and the fast analysis/synthesis passes.

use super::function::GridFunction;
use super::grid::{Cube, DyadicGrid, HaarIndex};
use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

fn check_resolution(grid: &DyadicGrid, q: &Cube, alpha: &HaarIndex) -> Result<()> {
    grid.check(q)?;
    if alpha.dim() != grid.dim() {
        return Err(domain(format!(
            "Haar index {alpha} has dimension {}, grid has {}",
            alpha.dim(),
            grid.dim()
        )));
    }
    if alpha.is_cancellative() && q.level() >= grid.depth() {
        return Err(Error::Resolution(format!(
            "cancellative Haar function {alpha} on leaf cube {q} is not resolved by the grid"
        )));
    }
    Ok(())
}

/// `h_Q^α`, L²-normalized.
pub fn haar_function(grid: &DyadicGrid, q: &Cube, alpha: &HaarIndex) -> Result<GridFunction> {
    check_resolution(grid, q, alpha)?;
    let mut f = GridFunction::zeros(grid);
    let amp = q.measure().powf(-0.5);
    if !alpha.is_cancellative() {
        f.values_mut()[grid.leaf_range(q)].fill(amp);
        return Ok(f);
    }
    for (c, child) in q.children().enumerate() {
        let v = amp * alpha.sign(c);
        f.values_mut()[grid.leaf_range(&child)].fill(v);
    }
    Ok(f)
}

/// `⟨f, h_Q^α⟩` by direct quadrature over the leaves of `Q`.
pub fn haar_coefficient<T: Scalar>(f: &GridFunction<T>, q: &Cube, alpha: &HaarIndex) -> Result<T> {
    let grid = f.grid();
    check_resolution(grid, q, alpha)?;
    let amp = q.measure().powf(-0.5) * grid.leaf_measure();
    if !alpha.is_cancellative() {
        let s: T = f.on(q).iter().copied().sum();
        return Ok(s.scale(amp));
    }
    let mut acc = T::zero();
    for (c, child) in q.children().enumerate() {
        let s: T = f.on(&child).iter().copied().sum();
        acc += s.scale(alpha.sign(c));
    }
    Ok(acc.scale(amp))
}

/// Number of levels carrying `h^α` terms: cancellative indices need children.
pub fn haar_levels(grid: &DyadicGrid, alpha: &HaarIndex) -> u32 {
    if alpha.is_cancellative() {
        grid.depth()
    } else {
        grid.depth() + 1
    }
}

/// Coefficient from an average pyramid: `⟨f, h_Q^α⟩` for the cube at
/// `(level, pos)`.
#[inline]
pub(crate) fn coefficient_from_pyramid<T: Scalar>(
    pyr: &[Vec<T>],
    dim: usize,
    level: usize,
    pos: usize,
    alpha: &HaarIndex,
    signs: &[f64],
) -> T {
    let measure = (-((dim * level) as f64)).exp2();
    if !alpha.is_cancellative() {
        return pyr[level][pos].scale(measure.sqrt());
    }
    let n = 1usize << dim;
    let base = pos << dim;
    let mut acc = T::zero();
    for c in 0..n {
        acc += pyr[level + 1][base + c].scale(signs[c]);
    }
    acc.scale(measure.sqrt() / n as f64)
}

/// All coefficients `⟨f, h_Q^α⟩`, indexed `[level][pos]`, in one O(N) pass.
///
/// For cancellative `α` the levels are `0..D`; otherwise `0..=D`.
pub fn haar_coefficients<T: Scalar>(f: &GridFunction<T>, alpha: &HaarIndex) -> Vec<Vec<T>> {
    let pyr = f.average_pyramid();
    coefficients_from_pyramid(f.grid(), &pyr, alpha)
}

pub(crate) fn coefficients_from_pyramid<T: Scalar>(
    grid: &DyadicGrid,
    pyr: &[Vec<T>],
    alpha: &HaarIndex,
) -> Vec<Vec<T>> {
    let signs = alpha.signs();
    (0..haar_levels(grid, alpha) as usize)
        .map(|k| {
            (0..grid.cubes_at(k as u32))
                .map(|p| coefficient_from_pyramid(pyr, grid.dim(), k, p, alpha, &signs))
                .collect()
        })
        .collect()
}

/// `Σ_Q d_Q h_Q^α` over the levels present in `coeffs` (indexed `[level][pos]`).
pub fn haar_synthesis<T: Scalar>(
    grid: &DyadicGrid,
    alpha: &HaarIndex,
    coeffs: &[Vec<T>],
) -> Result<GridFunction<T>> {
    if coeffs.len() > haar_levels(grid, alpha) as usize {
        return Err(Error::Resolution(format!(
            "{} coefficient levels exceed what the grid resolves for {alpha}",
            coeffs.len()
        )));
    }
    let n = grid.dim();
    let signs = alpha.signs();
    let cancel = alpha.is_cancellative();
    let mut acc = vec![T::zero()];
    for k in 0..=grid.depth() as usize {
        if k > 0 {
            // expand level k-1 to level k, adding cancellative terms of k-1
            let prev = std::mem::take(&mut acc);
            let mut next = Vec::with_capacity(prev.len() << n);
            let amp = ((n * (k - 1)) as f64 / 2.0).exp2();
            for (p, &v) in prev.iter().enumerate() {
                let d = if cancel {
                    coeffs.get(k - 1).map(|c| c[p].scale(amp))
                } else {
                    None
                };
                for &s in &signs {
                    next.push(match d {
                        Some(d) => v + d.scale(s),
                        None => v,
                    });
                }
            }
            acc = next;
        }
        if !cancel {
            if let Some(c) = coeffs.get(k) {
                let amp = ((n * k) as f64 / 2.0).exp2();
                for (a, &d) in acc.iter_mut().zip(c) {
                    *a += d.scale(amp);
                }
            }
        }
    }
    GridFunction::from_storage(grid, acc)
}
