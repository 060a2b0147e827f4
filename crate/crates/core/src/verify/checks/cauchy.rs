use num_complex::Complex64;

use crate::dyadic::{ComplexFunction, GridFunction};
use crate::error::{config, Result};
use crate::operators::conjugated_family;
use crate::verify::config::ExperimentConfig;
use crate::verify::instance::TrialInstance;
use crate::verify::report::TrialReport;
use crate::weights::{multilinear_ap_characteristic, weighted_bmo_norm, WeightVector};

/// Largest total order the `2^K`-point stencil is used for.
pub const MAX_ORDER: usize = 3;

/// Angles sampled on the circle `|z_j^i| = δ_j^i`.
const CIRCLE_POINTS: usize = 8;

pub(crate) fn precheck(cfg: &ExperimentConfig) -> Result<()> {
    let k: usize = cfg.slot_orders().iter().sum();
    if k > MAX_ORDER {
        return Err(config(format!("finite-difference stencil for total order {k} is too large (max {MAX_ORDER})")));
    }
    Ok(())
}

struct Family<'a> {
    inst: &'a TrialInstance,
    inputs: Vec<ComplexFunction>,
    /// `(slot, index)` of every symbol, the differentiation variables.
    vars: Vec<(usize, usize)>,
}

impl Family<'_> {
    fn eval(&self, z: &[f64]) -> Result<GridFunction> {
        let mut zs: Vec<Vec<Complex64>> = self.inst.symbols.iter().map(|s| vec![Complex64::new(0.0, 0.0); s.len()]).collect();
        for (&(j, i), &v) in self.vars.iter().zip(z) {
            zs[j][i] = Complex64::new(v, 0.0);
        }
        let refs: Vec<&ComplexFunction> = self.inputs.iter().collect();
        Ok(conjugated_family(&self.inst.base, &self.inst.symbols, &zs, &refs)?.re())
    }

    /// Mixed central difference `(2h)^{-K} Σ_s (∏ s) F(s h)`.
    fn difference(&self, h: f64) -> Result<GridFunction> {
        let k = self.vars.len();
        let mut acc = GridFunction::zeros(&self.inst.grid);
        for mask in 0..1usize << k {
            let signs: Vec<f64> = (0..k).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let z: Vec<f64> = signs.iter().map(|s| s * h).collect();
            let sign: f64 = signs.iter().product();
            acc = &acc + &self.eval(&z)?.scale(sign);
        }
        Ok(acc.scale((0.5 / h).powi(k as i32)))
    }
}

pub(crate) fn trial(cfg: &ExperimentConfig, inst: &TrialInstance, t: usize) -> Result<TrialReport> {
    let mut r = TrialReport::new(t, inst.grid.depth());
    let f = inst.input_refs();
    let exact = inst.commutator()?.apply(&f)?;
    let family = Family {
        inst,
        inputs: inst.inputs.iter().map(GridFunction::to_complex).collect(),
        vars: inst
            .symbols
            .iter()
            .enumerate()
            .flat_map(|(j, s)| (0..s.len()).map(move |i| (j, i)))
            .collect(),
    };
    let k = family.vars.len();
    let sup_b = inst.symbols.iter().flatten().map(GridFunction::max_abs).fold(1.0, f64::max);
    let denom = exact.max_abs().max(f64::MIN_POSITIVE);
    let rel = |d: &GridFunction| d.max_diff(&exact) / denom;
    r.stat("order_total", k as f64);
    if k == 0 {
        let err = family.eval(&[])?.max_diff(&exact);
        r.require(err == 0.0, || format!("F(0) differs from T by {err:e}"));
        r.set_sides(err, cfg.options.cauchy_tolerance);
        return Ok(r);
    }

    // extrapolated difference; h grows with K to balance rounding against truncation
    let h = 10f64.powi(k as i32 - 5) / sup_b;
    let d1 = family.difference(h)?;
    let d2 = family.difference(h / 2.0)?;
    let extrapolated = &d2.scale(4.0 / 3.0) - &d1.scale(1.0 / 3.0);
    let err = rel(&extrapolated);
    r.set_sides(err, cfg.options.cauchy_tolerance);
    r.require(err <= cfg.options.cauchy_tolerance, || {
        format!("extrapolated derivative off by {err:.3e} (tolerance {})", cfg.options.cauchy_tolerance)
    });
    r.stat("h", h);

    // observed order at a step large enough to keep rounding negligible
    let h0 = 1e-2 / sup_b;
    let e1 = rel(&family.difference(h0)?);
    let e2 = rel(&family.difference(h0 / 2.0)?);
    let order = (e1 / e2).log2();
    r.stat("error_h", e1);
    r.stat("error_h_half", e2);
    r.stat("order", order);
    if e1 > 0.0 {
        r.require((order - 2.0).abs() <= cfg.options.order_tolerance, || {
            format!("observed order {order:.3} (errors {e1:.3e}, {e2:.3e})")
        });
    }

    // characteristics of the conjugated weights on the circle |z_j^i| = ε₀ / (p_j ‖b_j^i‖_BMO)
    let e = &inst.exponents;
    let base_char = multilinear_ap_characteristic(&WeightVector::new(inst.mu.clone(), e.clone())?);
    let mut radii = Vec::with_capacity(k);
    for &(j, i) in &family.vars {
        let n = weighted_bmo_norm(&inst.symbols[j][i], None)?;
        r.bmo_norms.push(n);
        radii.push(if n > 0.0 { cfg.options.cauchy_radius / (e.get(j) * n) } else { 0.0 });
    }
    let mut circle_max = 0.0f64;
    for a in 0..CIRCLE_POINTS {
        let theta = std::f64::consts::TAU * a as f64 / CIRCLE_POINTS as f64;
        let mut v = inst.mu.clone();
        for (&(j, i), &rad) in family.vars.iter().zip(&radii) {
            let re = rad * theta.cos();
            let pj = e.get(j);
            v[j] = v[j].zip_map(&inst.symbols[j][i], |w, b| w * (pj * b * re).exp())?;
        }
        let c = multilinear_ap_characteristic(&WeightVector::new(v, e.clone())?);
        circle_max = circle_max.max(c / base_char);
    }
    r.require(circle_max.is_finite(), || "conjugated characteristic not finite on the circle".into());
    r.characteristics.insert("w_multilinear".into(), base_char);
    r.stat("circle_max_ratio", circle_max);
    Ok(r)
}
