use std::sync::Arc;

use crate::dyadic::{average, lp_norm, GridFunction};
use crate::error::{config, Result};
use crate::operators::{commutator_single, MultilinearOperator};
use crate::verify::config::{ExperimentConfig, OperatorSpec};
use crate::verify::instance::{aux_seed, TrialInstance};
use crate::verify::norm::{estimate_operator_norm, haar_test_inputs};
use crate::verify::report::TrialReport;
use crate::weights::{dual_weight, multilinear_ap_characteristic, weight_product, weighted_bmo_norm, BloomSetup, WeightVector};

/// Relative error allowed in the exact identities.
const EXACT: f64 = 1e-12;

pub(crate) fn precheck(cfg: &ExperimentConfig) -> Result<()> {
    let base = match &cfg.operator {
        OperatorSpec::Commutator { base, .. } => base.as_ref(),
        other => other,
    };
    if !matches!(base, OperatorSpec::HaarMultiplier { .. }) {
        return Err(config("the lower bound check needs a Haar multiplier base"));
    }
    let commuted = cfg.commuted_slots();
    let orders = cfg.slot_orders();
    if commuted.len() != 1 || orders[commuted[0]] != 1 {
        return Err(config("the lower bound check commutes exactly one slot, once"));
    }
    let beta = commuted[0];
    let alphas = base.alphas();
    let m = cfg.arity();
    if !(0..m).any(|j| j != beta && alphas[j].iter().any(|&a| a == 0)) {
        return Err(config("some input index other than the commuted slot must be cancellative"));
    }
    Ok(())
}

pub(crate) fn trial(cfg: &ExperimentConfig, inst: &TrialInstance, t: usize) -> Result<TrialReport> {
    let grid = &inst.grid;
    let depth = grid.depth();
    let beta = inst.commuted[0];
    let mf = inst.base.arity() as f64;
    // ε_J from the stored coefficient c_J = ε_J |J|^{-(m-1)/2}
    let eps_of = |k: u32, pos: usize| {
        inst.base.coefficients()[k as usize][pos].abs() * grid.level_measure(k).powf((mf - 1.0) / 2.0)
    };
    let eps_min = (0..depth)
        .flat_map(|k| (0..grid.cubes_at(k)).map(move |pos| (k, pos)))
        .map(|(k, pos)| eps_of(k, pos))
        .fold(f64::INFINITY, f64::min);
    if !(eps_min >= 1.0 - EXACT) {
        return Err(config(format!("|epsilon_I| must be at least 1, found {eps_min}")));
    }
    let mut r = TrialReport::new(t, depth);
    let b = &inst.symbols[beta][0];
    let comm = commutator_single(Arc::new(inst.base.clone()), b, beta)?;
    let e = inst.exponents.clone();
    let p = e.p();
    let w = inst.mu.clone();
    let setup = BloomSetup::new(e.clone(), vec![], w.clone(), w.clone())?;
    let nu = setup.target_weight();

    // ν_{w⃗'} = ν_{w⃗}^{1/(1-mp)}
    let duals = w
        .iter()
        .enumerate()
        .map(|(j, wj)| dual_weight(wj, e.get(j)))
        .collect::<Result<Vec<_>>>()?;
    let dual_vec = WeightVector::new(duals, crate::weights::ExponentVector::new(e.duals())?)?;
    let nu_dual = weight_product(&dual_vec);
    let nu_pow = nu.map(|v| v.powf(1.0 / (1.0 - mf * p)));
    let dual_err = nu_dual
        .values()
        .iter()
        .zip(nu_pow.values())
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    r.require(dual_err <= EXACT, || format!("dual weight product off by {dual_err:.3e}"));
    r.stat("dual_weight_error", dual_err);

    let seed = aux_seed(cfg.seed, depth, t, 0x6e6f726d);
    let estimate = estimate_operator_norm(comm.as_ref(), &setup, cfg.options.norm_trials, seed, None)?;
    let alphas = inst.base.input_alphas().to_vec();

    struct PerCube {
        lhs: f64,
        nu_pow_mass: f64,
        w_mass: Vec<f64>,
        mean_osc: f64,
    }
    let mut cubes = Vec::new();
    let mut measured = 0.0f64;
    let mut exact_err = 0.0f64;
    for k in 0..depth {
        for j in grid.level_cubes(k) {
            let f = haar_test_inputs(grid, &j, &alphas)?;
            let refs: Vec<&GridFunction> = f.iter().collect();
            let g = comm.apply(&refs)?.abs();
            let lam = average(b, &j)?;
            let eps_j = eps_of(k, j.pos());
            let range = grid.leaf_range(&j);
            let scale = g.max_abs().max(b.max_abs()).max(1.0);
            for (x, gv) in g.values().iter().enumerate() {
                let expected = if range.contains(&x) { eps_j * (b.values()[x] - lam).abs() } else { 0.0 };
                exact_err = exact_err.max((gv - expected).abs() / scale);
            }
            let h = grid.leaf_measure();
            let w_mass: Vec<f64> = w.iter().map(|wj| wj.on(&j).iter().sum::<f64>() * h).collect();
            let mut test_norm = 1.0;
            for (jj, mass) in w_mass.iter().enumerate() {
                test_norm *= mass.powf(1.0 / e.get(jj));
            }
            measured = measured.max(lp_norm(&g, p, Some(&nu))? / test_norm);
            let osc: Vec<f64> = b.on(&j).iter().map(|v| (v - lam).abs()).collect();
            cubes.push(PerCube {
                lhs: osc.iter().map(|v| v.powf(1.0 / mf)).sum::<f64>() * h,
                nu_pow_mass: nu_pow.on(&j).iter().sum::<f64>() * h,
                w_mass,
                mean_osc: osc.iter().map(|v| v.powf(1.0 / mf)).sum::<f64>() / osc.len() as f64,
            });
        }
    }
    r.require(exact_err <= EXACT, || format!("commutator of the test inputs off by {exact_err:.3e}"));
    r.stat("exact_error", exact_err);
    let norm = estimate.max(measured);
    r.stat("norm_estimate", estimate);
    r.stat("norm_measured", measured);

    // ∫_J |b - ⟨b⟩_J|^{1/m} ≤ N^{1/m} (∫_J ν^{1/(1-mp)})^{(mp-1)/(mp)} ∏ (∫_J w_j)^{1/(m p_j)}
    let mp = mf * p;
    let mut min_slack = f64::INFINITY;
    let mut recovered = 0.0f64;
    for c in &cubes {
        let mut rhs = norm.powf(1.0 / mf) * c.nu_pow_mass.powf((mp - 1.0) / mp);
        for (jj, mass) in c.w_mass.iter().enumerate() {
            rhs *= mass.powf(1.0 / (mf * e.get(jj)));
        }
        let sl = rhs - c.lhs;
        r.require(c.lhs <= rhs * (1.0 + EXACT) + 1e-300, || format!("BMO chain fails: {:e} > {rhs:e}", c.lhs));
        min_slack = min_slack.min(sl);
        recovered = recovered.max(c.mean_osc.powf(mf));
    }
    r.min_slack = Some(min_slack);
    let bmo = weighted_bmo_norm(b, None)?;
    r.bmo_norms.push(bmo);
    r.require(recovered <= bmo * (1.0 + EXACT), || format!("recovered oscillation {recovered:e} above BMO norm {bmo:e}"));
    r.stat("jensen_ratio", if bmo > 0.0 { recovered / bmo } else { 0.0 });
    let dual_char = multilinear_ap_characteristic(&dual_vec);
    for (j, wj) in w.iter().enumerate() {
        r.characteristics.insert(format!("w[{j}]"), crate::weights::ap_characteristic(wj, e.get(j))?);
    }
    r.characteristics.insert("w_multilinear".into(), multilinear_ap_characteristic(setup.mu()));
    r.characteristics.insert("dual_multilinear".into(), dual_char);
    r.set_sides(recovered, norm * dual_char.powf((mp - 1.0) / p));
    r.require(r.ratio.is_finite(), || "recovered ratio not finite".into());
    Ok(r)
}
