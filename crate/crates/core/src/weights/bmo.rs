//! Weighted BMO norms, John–Nirenberg averages and conjugated weights.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exponents::check_positive;
use crate::dyadic::GridFunction;
use crate::error::Result;

/// Max over cubes at each level of `F(Q, leaf values of Q, ⟨b⟩_Q)`, where the
/// per-cube statistic is accumulated leaf by leaf.
fn per_cube_max(b: &GridFunction, stat: impl Fn(usize, &[f64], f64) -> f64 + Sync) -> f64 {
    let grid = b.grid();
    let pyr = b.average_pyramid();
    (0..=grid.depth())
        .into_par_iter()
        .map(|k| {
            grid.level_cubes(k)
                .map(|q| stat(q.pos(), b.on(&q), pyr[k as usize][q.pos()]))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// `max_Q ν(Q)^{-1} ∫_Q |b - ⟨b⟩_Q|`; `nu = None` gives the dyadic BMO norm.
pub fn weighted_bmo_norm(b: &GridFunction, nu: Option<&GridFunction>) -> Result<f64> {
    if let Some(nu) = nu {
        b.ensure_same_grid(nu)?;
        check_positive(nu)?;
    }
    let h = b.grid().leaf_measure();
    // ν(Q) per cube comes from the same contiguous leaf slices
    let grid = b.grid();
    let nu_pyr = nu.map(|nu| nu.average_pyramid());
    let pyr = b.average_pyramid();
    let norm = (0..=grid.depth())
        .into_par_iter()
        .map(|k| {
            grid.level_cubes(k)
                .map(|q| {
                    let avg = pyr[k as usize][q.pos()];
                    let osc: f64 = b.on(&q).iter().map(|v| (v - avg).abs()).sum::<f64>() * h;
                    let mass = match &nu_pyr {
                        Some(np) => np[k as usize][q.pos()] * q.measure(),
                        None => q.measure(),
                    };
                    osc / mass
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(norm)
}

/// Result of [`john_nirenberg_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnNirenberg {
    pub bmo_norm: f64,
    /// `max_Q ⟨e^{|b - ⟨b⟩_Q|}⟩_Q`.
    pub exp_average: f64,
}

pub fn john_nirenberg_check(b: &GridFunction) -> JohnNirenberg {
    let exp_average = per_cube_max(b, |_, vals, avg| {
        vals.iter().map(|v| (v - avg).abs().exp()).sum::<f64>() / vals.len() as f64
    });
    JohnNirenberg {
        bmo_norm: weighted_bmo_norm(b, None).expect("unweighted"),
        exp_average,
    }
}

/// `e^{p·Re(b z)} w`.
pub fn conjugate_weight(w: &GridFunction, b: &GridFunction, z: Complex64, p: f64) -> Result<GridFunction> {
    check_positive(w)?;
    w.zip_map(b, |wv, bv| (p * bv * z.re).exp() * wv)
}
