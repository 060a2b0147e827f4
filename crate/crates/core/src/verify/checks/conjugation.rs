use num_complex::Complex64;

use crate::dyadic::GridFunction;
use crate::error::Result;
use crate::verify::config::{ExperimentConfig, SymbolGen};
use crate::verify::instance::{aux_seed, TrialInstance};
use crate::verify::random::random_bmo_symbol;
use crate::verify::report::TrialReport;
use crate::weights::{conjugate_weight, john_nirenberg_check, multilinear_ap_characteristic, weighted_bmo_norm, WeightVector};

fn conjugated(inst: &TrialInstance, norms: &[Vec<f64>], t: f64) -> Result<f64> {
    let e = &inst.exponents;
    let mut v = inst.mu.clone();
    for (j, slot) in inst.symbols.iter().enumerate() {
        for (b, &n) in slot.iter().zip(&norms[j]) {
            let z = if n > 0.0 { t / n } else { 0.0 };
            v[j] = conjugate_weight(&v[j], b, Complex64::new(z, 0.0), e.get(j))?;
        }
    }
    Ok(multilinear_ap_characteristic(&WeightVector::new(v, e.clone())?))
}

pub(crate) fn trial(cfg: &ExperimentConfig, inst: &TrialInstance, t: usize) -> Result<TrialReport> {
    let depth = inst.grid.depth();
    let opts = &cfg.options;
    let mut r = TrialReport::new(t, depth);
    let base = multilinear_ap_characteristic(&WeightVector::new(inst.mu.clone(), inst.exponents.clone())?);
    r.characteristics.insert("w_multilinear".into(), base);
    let norms: Vec<Vec<f64>> = inst
        .symbols
        .iter()
        .map(|s| s.iter().map(|b| weighted_bmo_norm(b, None)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    r.bmo_norms = norms.iter().flatten().copied().collect();

    let at_zero = conjugated(inst, &norms, 0.0)? / base;
    r.require(at_zero == 1.0, || format!("ratio at z = 0 is {at_zero}"));

    // t = 2^{-k}, largest first
    let ratios: Vec<(f64, f64)> = (0..=opts.sweep_steps)
        .map(|k| {
            let tk = 0.5f64.powi(k as i32);
            conjugated(inst, &norms, tk).map(|c| (tk, c / base))
        })
        .collect::<Result<_>>()?;
    r.require(ratios.iter().all(|(_, q)| q.is_finite()), || "conjugated characteristic not finite".into());
    let (t_min, smallest) = *ratios.last().expect("at least one step");
    let tol = opts.conjugation_tolerance;
    r.require(smallest <= tol && smallest >= 1.0 / tol, || {
        format!("ratio {smallest} at t = {t_min} not within {tol}")
    });
    r.set_sides(smallest, 1.0);
    let max_ratio = ratios.iter().map(|(_, q)| *q).fold(0.0, f64::max);
    r.stat("max_ratio", max_ratio);
    // ascending t: first crossing of the configured limit
    let crossing = ratios.iter().rev().find(|(_, q)| *q > opts.conjugation_limit).map(|(tk, _)| *tk);
    r.stat("epsilon", crossing.unwrap_or(f64::INFINITY).min(2.0));
    r.stat("crossed", f64::from(u8::from(crossing.is_some())));
    let monotone = ratios.windows(2).all(|w| w[0].1 >= w[1].1 - 1e-12);
    r.stat("monotone", f64::from(u8::from(monotone)));

    // John–Nirenberg at small norm: a fresh symbol and the trial symbols rescaled
    let density = match cfg.symbols {
        SymbolGen::Random { density, .. } => density,
        _ => 0.5,
    };
    let mut rng = crate::verify::instance::trial_rng(aux_seed(cfg.seed, depth, t, 0x6a6e), depth, t);
    let mut corpus: Vec<GridFunction> = vec![random_bmo_symbol(&inst.grid, &mut rng, opts.small_norm, density, None)?];
    for (b, &n) in inst.symbols.iter().flatten().zip(norms.iter().flatten()) {
        if n > 0.0 {
            corpus.push(b.scale(opts.small_norm / n));
        }
    }
    let mut jn_max = 0.0f64;
    for b in &corpus {
        jn_max = jn_max.max(john_nirenberg_check(b).exp_average);
    }
    r.require(jn_max <= opts.exp_average_bound, || {
        format!("exponential average {jn_max} above {}", opts.exp_average_bound)
    });
    r.stat("exp_average", jn_max);
    Ok(r)
}
