use super::min_value;
use crate::dyadic::{average, lp_norm, GridFunction};
use crate::error::{config, Result};
use crate::sparse::{adapted_sparse_apply, adapted_sparse_sum, augment_for_symbol, sparse_dominate_commutator, SparseCollection};
use crate::verify::config::ExperimentConfig;
use crate::verify::instance::TrialInstance;
use crate::verify::report::TrialReport;
use crate::weights::{theorem_constant_from, weighted_bmo_norm};

pub(crate) fn precheck(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.slot_orders().iter().any(|&k| k > 1) {
        return Err(config("the Bloom bound covers first-order commutators (order ≤ 1 per slot)"));
    }
    Ok(())
}

/// `A¹_S(g) = Σ_{Q∈S} ⟨|g|⟩_Q χ_Q`.
fn a1(s: &SparseCollection, g: &GridFunction) -> Result<GridFunction> {
    adapted_sparse_apply(s, &[], &[], &[], &[g])
}

/// Relative tolerance scale of a pointwise comparison.
fn scale(f: &GridFunction) -> f64 {
    f.max_abs().max(1.0)
}

pub(crate) fn trial(cfg: &ExperimentConfig, inst: &TrialInstance, t: usize) -> Result<TrialReport> {
    let depth = inst.grid.depth();
    let setup = inst.setup()?;
    let e = setup.exponents();
    let f = inst.input_refs();
    let mut f_norm = 1.0;
    for (j, fj) in f.iter().enumerate() {
        f_norm *= lp_norm(*fj, e.get(j), Some(setup.mu().weight(j)))?;
    }
    if f_norm == 0.0 {
        return Ok(TrialReport::skipped(t, depth));
    }
    let ch = setup.characteristics();
    let all = ch.mu.iter().chain(&ch.lambda).chain([&ch.reduced, &ch.mu_multilinear, &ch.lambda_multilinear]);
    if all.into_iter().any(|c| !c.is_finite()) {
        return Err(config("degenerate weights: infinite characteristic"));
    }
    let mut r = TrialReport::new(t, depth);
    for (j, (a, b)) in ch.mu.iter().zip(&ch.lambda).enumerate() {
        r.characteristics.insert(format!("mu[{j}]"), *a);
        r.characteristics.insert(format!("lambda[{j}]"), *b);
    }
    r.characteristics.insert("reduced".into(), ch.reduced);
    r.characteristics.insert("mu_multilinear".into(), ch.mu_multilinear);
    r.characteristics.insert("lambda_multilinear".into(), ch.lambda_multilinear);
    let constant = theorem_constant_from(&setup, &ch);
    r.constant = Some(constant);

    let symbols = inst.commuted_symbols();
    let mut bmo_prod = 1.0;
    for (b, &s) in symbols.iter().zip(&inst.commuted) {
        let n = weighted_bmo_norm(b, Some(&setup.bloom_weight(s)))?;
        r.bmo_norms.push(n);
        bmo_prod *= n;
    }
    let nu = setup.target_weight();
    let p = e.p();
    let lhs_fn = inst.commutator()?.apply(&f)?;
    let lhs = lp_norm(&lhs_fn, p, Some(&nu))?;
    let rhs = constant * bmo_prod * f_norm;
    r.set_sides(lhs, rhs);
    r.require(r.ratio.is_finite(), || format!("ratio not finite: lhs {lhs:e}, rhs {rhs:e}"));

    // sparse-form chain on the same inputs
    let cert = sparse_dominate_commutator(&inst.base, &symbols, &inst.commuted, &f)?;
    let mut min_slack = cert.min_slack;
    r.require(cert.min_slack >= -cfg.tolerance * scale(&lhs_fn), || {
        format!("sparse domination slack {:.3e}", cert.min_slack)
    });
    let summed = adapted_sparse_sum(&cert.collection, &symbols, &inst.commuted, &f)?;
    let summed_norm = lp_norm(&summed, p, Some(&nu))?;
    r.require(lhs <= cert.constant * summed_norm * (1.0 + 1e-12) + cfg.tolerance, || {
        format!("norm of commutator {lhs:e} above C·‖Σ A^γ‖ = {:e}", cert.constant * summed_norm)
    });
    r.stat("sparse_constant", cert.constant);
    r.stat("sparse_sum_ratio", cert.constant * summed_norm / rhs);
    let ell = inst.commuted.len();
    for mask in 0..1usize << ell {
        let gammas: Vec<u8> = (0..ell).map(|i| 1 + (mask >> i & 1) as u8).collect();
        let a = adapted_sparse_apply(&cert.collection, &symbols, &inst.commuted, &gammas, &f)?;
        let label: String = gammas.iter().map(|g| g.to_string()).collect();
        r.stat(&format!("sparse_ratio[{label}]"), lp_norm(&a, p, Some(&nu))? / rhs);
    }

    // oscillation chain per commuted slot
    for (b, &s) in symbols.iter().zip(&inst.commuted) {
        let nu_s = setup.bloom_weight(s);
        let norm = weighted_bmo_norm(b, Some(&nu_s))?;
        let aug = augment_for_symbol(&cert.collection, b)?;
        r.require(aug.realized_constant <= aug.design_constant * (1.0 + 1e-12), || {
            format!(
                "slot {s}: augmentation constant {} above design {}",
                aug.realized_constant, aug.design_constant
            )
        });
        let c1 = aug.realized_constant;
        r.stat(&format!("augment_constant[{s}]"), c1);
        r.stat(&format!("augment_added[{s}]"), aug.added as f64);

        // |b - ⟨b⟩_Q| ≤ C₁ ‖b‖ A¹_{S̃}(ν χ_Q) on every Q ∈ S
        let grid = b.grid();
        let mut per_leaf: Vec<Vec<(u32, f64)>> = vec![Vec::new(); grid.leaf_count()];
        for q in aug.collection.cubes() {
            let avg = average(&nu_s, q)?;
            for x in grid.leaf_range(q) {
                per_leaf[x].push((q.level(), avg));
            }
        }
        let mut osc_slack = f64::INFINITY;
        for q in cert.collection.cubes() {
            let lam = average(b, q)?;
            for x in grid.leaf_range(q) {
                let bound: f64 = per_leaf[x].iter().filter(|(l, _)| *l >= q.level()).map(|(_, a)| a).sum();
                osc_slack = osc_slack.min(c1 * norm * bound - (b.values()[x] - lam).abs());
            }
        }
        let tol = cfg.tolerance * b.max_abs().max(1.0);
        r.require(osc_slack >= -tol, || format!("slot {s}: oscillation bound slack {osc_slack:.3e}"));

        // 𝒯^γ_b(f_s) ≤ C₁ ‖b‖ A¹_{S̃}(ν A¹_{S̃}(|f_s|)) for γ = 1, 2
        let inner = a1(&aug.collection, f[s])?;
        let outer = a1(&aug.collection, &(&nu_s * &inner))?.scale(c1 * norm);
        for gamma in [1u8, 2] {
            let tb = adapted_sparse_apply(&cert.collection, &[b.clone()], &[0], &[gamma], &[f[s]])?;
            let sl = min_value(&(&outer - &tb));
            r.require(sl >= -cfg.tolerance * scale(&outer), || {
                format!("slot {s}: sparse chain for gamma {gamma} slack {sl:.3e}")
            });
            min_slack = min_slack.min(sl);
        }
        min_slack = min_slack.min(osc_slack);
    }
    r.min_slack = Some(min_slack);
    Ok(r)
}
