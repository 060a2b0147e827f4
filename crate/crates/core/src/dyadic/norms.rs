//! Averages, Lebesgue (quasi-)norms, weak norms and the dyadic maximal function.

use super::function::GridFunction;
use super::grid::Cube;
use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// `⟨f⟩_Q`.
pub fn average<T: Scalar>(f: &GridFunction<T>, q: &Cube) -> Result<T> {
    f.grid().check(q)?;
    let vals = f.on(q);
    let s: T = vals.iter().copied().sum();
    Ok(s.scale(1.0 / vals.len() as f64))
}

fn check_weight(f: &GridFunction<impl Scalar>, nu: Option<&GridFunction>) -> Result<()> {
    if let Some(nu) = nu {
        f.ensure_same_grid(nu)?;
        if let Some(v) = nu.values().iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(domain(format!("weight value {v} is not strictly positive")));
        }
    }
    Ok(())
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(domain(format!("exponent {p} must be positive and finite")));
    }
    Ok(())
}

/// `(∫ |f|^p ν)^{1/p}`; `nu = None` is Lebesgue measure. Quasi-norm for `p < 1`.
pub fn lp_norm<T: Scalar>(f: &GridFunction<T>, p: f64, nu: Option<&GridFunction>) -> Result<f64> {
    check_exponent(p)?;
    check_weight(f, nu)?;
    let h = f.grid().leaf_measure();
    let s: f64 = match nu {
        None => f.values().iter().map(|v| v.modulus().powf(p)).sum(),
        Some(nu) => f
            .values()
            .iter()
            .zip(nu.values())
            .map(|(v, w)| v.modulus().powf(p) * w)
            .sum(),
    };
    Ok((s * h).powf(1.0 / p))
}

/// `sup_λ λ·ν({|f| > λ})^{1/q}`, evaluated exactly at the distinct values of `|f|`.
pub fn weak_lp_norm<T: Scalar>(
    f: &GridFunction<T>,
    q: f64,
    nu: Option<&GridFunction>,
) -> Result<f64> {
    check_exponent(q)?;
    check_weight(f, nu)?;
    let h = f.grid().leaf_measure();
    let mut pairs: Vec<(f64, f64)> = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.modulus(), nu.map_or(1.0, |w| w.values()[i]) * h))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    // sup over λ just below each value v is v·ν(|f| ≥ v)^{1/q}
    let mut best = 0.0f64;
    let mut mass = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == v {
            mass += pairs[i].1;
            i += 1;
        }
        if v > 0.0 {
            best = best.max(v * mass.powf(1.0 / q));
        }
    }
    Ok(best)
}

/// `Mf(x) = max_{Q ∋ x} ⟨|f|⟩_Q` over dyadic cubes of the grid.
pub fn dyadic_maximal<T: Scalar>(f: &GridFunction<T>) -> GridFunction {
    let pyr = f.abs().average_pyramid();
    let n = f.grid().children_per_cube();
    let mut run = vec![pyr[0][0]];
    for lvl in &pyr[1..] {
        run = lvl
            .iter()
            .enumerate()
            .map(|(p, &a)| a.max(run[p / n]))
            .collect();
    }
    GridFunction::from_storage(f.grid(), run).expect("leaf-sized")
}
