use rand::Rng;

use crate::dyadic::{haar_synthesis, DyadicGrid, GridFunction, HaarIndex};
use crate::error::Result;
use crate::weights::{ap_characteristic, weighted_bmo_norm};

/// `Σ_I Σ_α c_{I,α} |I|^{1/2} h_I^α` over cancellative `α`, with `c_{I,α}` drawn
/// by `coeff` (levels `0..D`).
fn martingale(grid: &DyadicGrid, mut coeff: impl FnMut() -> f64) -> GridFunction {
    let mut total = GridFunction::zeros(grid);
    for alpha in HaarIndex::cancellative_all(grid.dim()) {
        let coeffs: Vec<Vec<f64>> = (0..grid.depth())
            .map(|k| {
                let root = grid.level_measure(k).sqrt();
                (0..grid.cubes_at(k)).map(|_| coeff() * root).collect()
            })
            .collect();
        let part = haar_synthesis(grid, &alpha, &coeffs).expect("levels match the grid");
        total = &total + &part;
    }
    total
}

/// `β`: random ±1 Haar martingale with coefficients `±|I|^{1/2}`.
pub fn random_martingale(grid: &DyadicGrid, rng: &mut impl Rng) -> GridFunction {
    martingale(grid, || if rng.random::<bool>() { 1.0 } else { -1.0 })
}

/// `w = exp(s·β)`; `s = 0` gives `w ≡ 1`.
pub fn random_weight(grid: &DyadicGrid, rng: &mut impl Rng, strength: f64) -> GridFunction {
    let beta = random_martingale(grid, rng);
    beta.map(|v| (strength * v).exp())
}

/// `exp(s·β)` with the largest `s ≤ strength` (to bisection precision) such
/// that `[w]_{A_p} ≤ max_characteristic` for every `p` in `exponents`; returns
/// the weight and the strength used.
pub fn calibrated_weight(
    grid: &DyadicGrid,
    rng: &mut impl Rng,
    strength: f64,
    exponents: &[f64],
    max_characteristic: f64,
) -> Result<(GridFunction, f64)> {
    let beta = random_martingale(grid, rng);
    let worst = |s: f64| -> Result<f64> {
        let w = beta.map(|v| (s * v).exp());
        exponents.iter().try_fold(1.0f64, |acc, &p| Ok(acc.max(ap_characteristic(&w, p)?)))
    };
    let s = if worst(strength)? <= max_characteristic {
        strength
    } else {
        // s = 0 gives w ≡ 1, characteristic 1
        let (mut lo, mut hi) = (0.0, strength);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if worst(mid)? <= max_characteristic {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok((beta.map(|v| (s * v).exp()), s))
}

/// Random Haar martingale supported on a random sub-family of cubes (each
/// cube and index kept with probability `density`), rescaled so that
/// `‖b‖_{BMO(ν)} = norm` (`ν ≡ 1` when absent).
pub fn random_bmo_symbol(
    grid: &DyadicGrid,
    rng: &mut impl Rng,
    norm: f64,
    density: f64,
    nu: Option<&GridFunction>,
) -> Result<GridFunction> {
    let mut b = martingale(grid, || {
        let keep = rng.random::<f64>() < density;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        if keep {
            sign
        } else {
            0.0
        }
    });
    if norm == 0.0 {
        return Ok(GridFunction::zeros(grid));
    }
    let mut current = weighted_bmo_norm(&b, nu)?;
    if current == 0.0 {
        // empty family: fall back to the root coefficient
        let alpha = HaarIndex::cancellative_all(grid.dim()).next().expect("n ≥ 1");
        b = crate::dyadic::haar_function(grid, &grid.root(), &alpha)?;
        current = weighted_bmo_norm(&b, nu)?;
    }
    Ok(b.scale(norm / current))
}

/// Independent uniform values in `[-1, 1]`.
pub fn random_input(grid: &DyadicGrid, rng: &mut impl Rng) -> GridFunction {
    let v = (0..grid.leaf_count()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    GridFunction::from_storage(grid, v).expect("leaf-sized")
}
