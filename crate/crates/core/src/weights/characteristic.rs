//! Muckenhoupt characteristics, evaluated in log-space over every dyadic cube.

use rayon::prelude::*;

use super::exponents::{check_positive, conjugate_exponent, WeightVector};
use crate::dyadic::{DyadicGrid, GridFunction};
use crate::error::{domain, Result};

/// `log ⟨e^x⟩_Q` for every cube, `[level][pos]`, from leaf log-values.
pub(crate) fn log_average_pyramid(grid: &DyadicGrid, logs: Vec<f64>) -> Vec<Vec<f64>> {
    let n = grid.children_per_cube();
    let ln_n = (n as f64).ln();
    let mut levels = vec![logs];
    for _ in 0..grid.depth() {
        let prev = levels.last().unwrap();
        let next = prev
            .chunks_exact(n)
            .map(|c| {
                let m = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                m + c.iter().map(|x| (x - m).exp()).sum::<f64>().ln() - ln_n
            })
            .collect();
        levels.push(next);
    }
    levels.reverse();
    levels
}

fn log_pyramid_of_power(w: &GridFunction, s: f64) -> Vec<Vec<f64>> {
    log_average_pyramid(w.grid(), w.values().iter().map(|v| s * v.ln()).collect())
}

/// Max over cubes of `Σ_i c_i · pyr_i[Q]`.
fn max_combination(pyrs: &[(f64, Vec<Vec<f64>>)]) -> f64 {
    let levels = pyrs[0].1.len();
    (0..levels)
        .into_par_iter()
        .map(|k| {
            (0..pyrs[0].1[k].len())
                .map(|p| pyrs.iter().map(|(c, pyr)| c * pyr[k][p]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// `[w]_{A_p} = max_Q ⟨w⟩_Q ⟨w^{1-p'}⟩_Q^{p-1}`.
pub fn ap_characteristic(w: &GridFunction, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(domain(format!("A_p characteristic needs p > 1, got {p}")));
    }
    check_positive(w)?;
    let pp = conjugate_exponent(p);
    let pyrs = [
        (1.0, log_pyramid_of_power(w, 1.0)),
        (p - 1.0, log_pyramid_of_power(w, 1.0 - pp)),
    ];
    Ok(max_combination(&pyrs).exp())
}

/// `ν_{w⃗} = ∏_j w_j^{p/p_j}`.
pub fn weight_product(wv: &WeightVector) -> GridFunction {
    let e = wv.exponents();
    let p = e.p();
    let grid = wv.weight(0).grid();
    let mut logs = vec![0.0; grid.leaf_count()];
    for (j, w) in wv.weights().iter().enumerate() {
        let c = p / e.get(j);
        for (l, v) in logs.iter_mut().zip(w.values()) {
            *l += c * v.ln();
        }
    }
    GridFunction::from_storage(grid, logs.into_iter().map(f64::exp).collect())
        .expect("leaf-sized")
}

/// `[w⃗]_{A_{p⃗}} = (max_Q ⟨ν_{w⃗}⟩_Q^{1/p} ∏_j ⟨w_j^{1-p'_j}⟩_Q^{1/p'_j})^p`.
pub fn multilinear_ap_characteristic(wv: &WeightVector) -> f64 {
    let e = wv.exponents();
    let p = e.p();
    let grid = wv.weight(0).grid();
    let mut log_nu = vec![0.0; grid.leaf_count()];
    for (j, w) in wv.weights().iter().enumerate() {
        let c = p / e.get(j);
        for (l, v) in log_nu.iter_mut().zip(w.values()) {
            *l += c * v.ln();
        }
    }
    let mut pyrs = vec![(1.0 / p, log_average_pyramid(grid, log_nu))];
    for (j, w) in wv.weights().iter().enumerate() {
        let pp = e.dual(j);
        pyrs.push((1.0 / pp, log_pyramid_of_power(w, 1.0 - pp)));
    }
    (p * max_combination(&pyrs)).exp()
}

/// `w^{1-p'}`.
pub fn dual_weight(w: &GridFunction, p: f64) -> Result<GridFunction> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(domain(format!("dual weight needs p > 1, got {p}")));
    }
    check_positive(w)?;
    let e = 1.0 - conjugate_exponent(p);
    Ok(w.map(|v| v.powf(e)))
}

/// `max_Q ⟨w^q⟩_Q^{1/q} / ⟨w⟩_Q`, the reverse-Hölder ratio at exponent `q ≥ 1`.
pub fn reverse_holder_ratio(w: &GridFunction, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(domain(format!("reverse Hölder exponent {q} must be ≥ 1")));
    }
    check_positive(w)?;
    let pyrs = [
        (1.0 / q, log_pyramid_of_power(w, q)),
        (-1.0, log_pyramid_of_power(w, 1.0)),
    ];
    Ok(max_combination(&pyrs).exp())
}

/// Largest `q ∈ [1, q_max]` with reverse-Hölder ratio at most `bound`, located
/// by bisection (the ratio is nondecreasing in `q`).
pub fn reverse_holder_exponent(w: &GridFunction, bound: f64, q_max: f64) -> Result<f64> {
    if !(bound >= 1.0) {
        return Err(domain(format!("reverse Hölder bound {bound} must be ≥ 1")));
    }
    if reverse_holder_ratio(w, q_max)? <= bound {
        return Ok(q_max);
    }
    let (mut lo, mut hi) = (1.0, q_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if reverse_holder_ratio(w, mid)? <= bound {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The reverse-Hölder exponent shared by `ν_{w⃗}` and every `w_j^{1-p'_j}`.
pub fn multilinear_reverse_holder_exponent(wv: &WeightVector, bound: f64, q_max: f64) -> Result<f64> {
    let mut q = reverse_holder_exponent(&weight_product(wv), bound, q_max)?;
    for j in 0..wv.len() {
        let d = dual_weight(wv.weight(j), wv.exponents().get(j))?;
        q = q.min(reverse_holder_exponent(&d, bound, q_max)?);
    }
    Ok(q)
}
