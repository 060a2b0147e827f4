//! Acceptance suite: one line per criterion, exit status 1 if any fails.

use std::sync::Arc;
use std::time::Instant;

use bloomlab::dyadic::{haar_coefficients, haar_function};
use bloomlab::operators::*;
use bloomlab::verify::{random_weight, run_check, CheckKind, CheckReport, ExperimentConfig};
use bloomlab::weights::{
    conjugate_exponent, dual_weight, holder_chain, weight_product, BloomSetup, ExponentVector, WeightVector,
};
use bloomlab::{DyadicGrid, GridFunction, HaarIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn random_fn(g: &DyadicGrid, rng: &mut ChaCha8Rng) -> GridFunction {
    let v = (0..g.leaf_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    GridFunction::from_storage(g, v).unwrap()
}

fn alpha(a: &[u8]) -> HaarIndex {
    HaarIndex::new(a).unwrap()
}

fn inner(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>() * a.grid().leaf_measure()
}

fn config(v: Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&v.to_string()).unwrap()
}

fn per_depth(r: &CheckReport, constant: bool) -> Vec<f64> {
    r.depths
        .iter()
        .map(|d| if constant { d.max_constant.unwrap_or(0.0) } else { d.max_ratio })
        .collect()
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(0.0, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else {
        max / min
    }
}

/// 1. Haar orthonormality and Parseval, n ∈ {1, 2}, depth ≤ 8.
fn haar_system() -> Outcome {
    let start = Instant::now();
    let mut ortho = 0.0f64;
    for (dim, depth) in [(1, 6), (2, 3)] {
        let g = DyadicGrid::new(dim, depth).unwrap();
        let mut fns = vec![haar_function(&g, &g.root(), &HaarIndex::ones(dim)).unwrap()];
        for q in g.all_cubes().filter(|q| q.level() < depth) {
            for a in HaarIndex::cancellative_all(dim) {
                fns.push(haar_function(&g, &q, &a).unwrap());
            }
        }
        assert_eq!(fns.len(), g.leaf_count());
        for (i, a) in fns.iter().enumerate() {
            for (j, b) in fns.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((inner(a, b) - target).abs());
            }
        }
    }
    let mut parseval = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (dim, depth) in [(1, 8), (2, 8)] {
        let g = DyadicGrid::new(dim, depth).unwrap();
        for _ in 0..3 {
            let f = random_fn(&g, &mut rng);
            let norm2 = inner(&f, &f);
            let mut sum = haar_coefficients(&f, &HaarIndex::ones(dim))[0][0].powi(2);
            for a in HaarIndex::cancellative_all(dim) {
                sum += haar_coefficients(&f, &a).iter().flatten().map(|c| c * c).sum::<f64>();
            }
            parseval = parseval.max((sum - norm2).abs() / norm2);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ortho < 1e-10 && parseval < 1e-10 && secs < 5.0,
        format!("orthonormality error {ortho:.2e}, Parseval error {parseval:.2e} (< 1e-10), {secs:.2} s (< 5 s)"),
    )
}

/// 2. Commutator algebra over 50 random trials.
fn commutator_algebra() -> Outcome {
    let g = DyadicGrid::new(1, 7).unwrap();
    let mut worst = 0.0f64;
    let rel = |a: &GridFunction, b: &GridFunction| a.max_diff(b) / b.max_abs().max(1.0);
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Operator = if seed % 2 == 0 {
            Arc::new(
                HaarSum::multiplier(&HaarMultiplierSpec {
                    epsilon: Epsilon::random_signs(&g, &mut rng),
                    alphas: vec![alpha(&[0]), alpha(&[1]), alpha(&[0])],
                })
                .unwrap(),
            )
        } else {
            Arc::new(
                HaarSum::paraproduct(&ParaproductSpec {
                    symbol: random_fn(&g, &mut rng),
                    epsilon: Epsilon::random_signs(&g, &mut rng),
                    alphas: vec![alpha(&[0]), alpha(&[0]), alpha(&[1]), alpha(&[0])],
                })
                .unwrap(),
            )
        };
        let (b1, b2, b3) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng), random_fn(&g, &mut rng));
        let (f1, f2) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
        let c = rng.random_range(-3.0..3.0);
        let f = [&f1, &f2];
        for slot in 0..2 {
            let base = commutator_single(t.clone(), &b1, slot).unwrap().apply(&f).unwrap();
            let shifted = commutator_single(t.clone(), &b1.map(|v| v + c), slot).unwrap().apply(&f).unwrap();
            worst = worst.max(rel(&shifted, &base));
            let combo = &b1 + &b2.scale(c);
            let lin = commutator_single(t.clone(), &combo, slot).unwrap().apply(&f).unwrap();
            let other = commutator_single(t.clone(), &b2, slot).unwrap().apply(&f).unwrap();
            worst = worst.max(rel(&lin, &(&base + &other.scale(c))));
        }
        let ab = wrap_commutators(t.clone(), &[vec![b1.clone(), b3.clone()], vec![]]).unwrap().apply(&f).unwrap();
        let ba = wrap_commutators(t.clone(), &[vec![b3.clone(), b1.clone()], vec![]]).unwrap().apply(&f).unwrap();
        worst = worst.max(rel(&ab, &ba));
        // four-term expansion of [b2, [b1, T]_1]_2
        let both = wrap_commutators(t.clone(), &[vec![b1.clone()], vec![b2.clone()]]).unwrap().apply(&f).unwrap();
        let b1f1 = &b1 * &f1;
        let b2f2 = &b2 * &f2;
        let oracle = &(&(&(&(&b1 * &b2) * &t.apply(&f).unwrap()) - &(&b2 * &t.apply(&[&b1f1, &f2]).unwrap()))
            - &(&b1 * &t.apply(&[&f1, &b2f2]).unwrap()))
            + &t.apply(&[&b1f1, &b2f2]).unwrap();
        worst = worst.max(rel(&both, &oracle));
    }
    outcome(worst < 1e-12, format!("max relative error {worst:.2e} over 50 trials (< 1e-12)"))
}

fn domination_config(operator: Value) -> Value {
    json!({
        "grid": {"dim": 1, "depth": 8},
        "commuted": [0, 1],
        "operator": operator,
        "trials": 100,
        "seed": 2024,
        "depths": [6, 8, 10]
    })
}

/// 3. Sparse domination, 100 trials per operator and depth.
fn sparse_domination() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, op) in [
        ("multiplier", json!({"kind": "haar_multiplier", "alphas": [[0], [1], [0]]})),
        ("paraproduct", json!({"kind": "paraproduct", "alphas": [[0], [0], [1], [0]]})),
    ] {
        let r = run_check(CheckKind::Domination, &config(domination_config(op))).unwrap();
        let at8 = r.trials.iter().filter(|t| t.depth == 8);
        let sparse_ok = at8.clone().all(|t| t.passed);
        let min_slack = at8.filter_map(|t| t.min_slack).fold(f64::INFINITY, f64::min);
        let c = per_depth(&r, true);
        let s = spread(&c);
        ok &= r.trials.iter().all(|t| t.passed) && min_slack >= -1e-10 && s < 2.0;
        parts.push(format!(
            "{name}: all certificates 1/2-sparse {sparse_ok}, min slack {min_slack:.2e}, C at 6/8/10 = {:.3}/{:.3}/{:.3} (spread {s:.3} < 2)",
            c[0], c[1], c[2]
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    outcome(ok, format!("{}; {secs:.1} s (< 60 s)", parts.join("; ")))
}

/// 4. Maximal truncation claim and weak-type ratio.
fn maximal_truncation() -> Outcome {
    let r = run_check(
        CheckKind::Maximal,
        &config(json!({
            "grid": {"dim": 1, "depth": 8},
            "operator": {"kind": "haar_multiplier", "alphas": [[0], [1], [0]]},
            "trials": 100,
            "seed": 7,
            "depths": [6, 8, 10]
        })),
    )
    .unwrap();
    let slack = r.trials.iter().filter_map(|t| t.min_slack).fold(f64::INFINITY, f64::min);
    let ratios = per_depth(&r, false);
    let s = spread(&ratios);
    outcome(
        slack >= -1e-12 && s < 2.0 && r.passed,
        format!(
            "min slack {slack:.2e} (>= -1e-12), weak-type ratio at 6/8/10 = {:.3}/{:.3}/{:.3} (spread {s:.3} < 2)",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

/// 5. Bloom bound with calibrated weights and unit Bloom-BMO symbols.
fn bloom_bound() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for commuted in [json!([0]), json!([0, 1])] {
        let r = run_check(
            CheckKind::Bloom,
            &config(json!({
                "grid": {"dim": 1, "depth": 8},
                "commuted": commuted,
                "operator": {"kind": "haar_multiplier", "alphas": [[0], [1], [0]]},
                "weights": {"kind": "random", "strength": 0.5, "max_characteristic": 4.0},
                "symbols": {"kind": "random", "norm": 1.0},
                "trials": 100,
                "seed": 99,
                "depths": [6, 8, 10]
            })),
        )
        .unwrap();
        let finite = r.trials.iter().all(|t| t.ratio.is_finite());
        let calibrated = r
            .trials
            .iter()
            .all(|t| t.characteristics.iter().filter(|(k, _)| k.starts_with("mu[") || k.starts_with("lambda[")).all(|(_, v)| *v <= 4.0 + 1e-12));
        let unit = r.trials.iter().all(|t| t.bmo_norms.iter().all(|n| (n - 1.0).abs() < 1e-10));
        let ratios = per_depth(&r, false);
        let s = spread(&ratios);
        let chain_slack = r.min_slack().unwrap_or(f64::NAN);
        let c1 = r
            .trials
            .iter()
            .flat_map(|t| t.stats.iter().filter(|(k, _)| k.starts_with("augment_constant")).map(|(_, v)| *v))
            .fold(0.0, f64::max);
        ok &= r.passed && finite && calibrated && unit && s < 2.0;
        parts.push(format!(
            "I = {commuted}: finite {finite}, chains hold {} (min slack {chain_slack:.2e}, max C1 {c1:.3}), max ratio at 6/8/10 = {:.3e}/{:.3e}/{:.3e} (spread {s:.3} < 2)",
            r.trials.iter().all(|t| t.passed),
            ratios[0], ratios[1], ratios[2]
        ));
    }
    outcome(ok, parts.join("; "))
}

/// 6. Cauchy identity for total orders 1 and 2.
fn cauchy_identity() -> Outcome {
    let mut ok = true;
    let mut worst_err = 0.0f64;
    let mut orders_seen = Vec::new();
    for orders in [json!([1, 0]), json!([0, 1]), json!([1, 1]), json!([2, 0]), json!([0, 2])] {
        let r = run_check(
            CheckKind::Cauchy,
            &config(json!({
                "grid": {"dim": 1, "depth": 8},
                "orders": orders,
                "operator": {"kind": "haar_multiplier", "alphas": [[0], [1], [0]]},
                "trials": 10,
                "seed": 5
            })),
        )
        .unwrap();
        for t in &r.trials {
            worst_err = worst_err.max(t.lhs);
            orders_seen.push(t.stats["order"]);
            ok &= t.lhs <= 1e-6 && (t.stats["order"] - 2.0).abs() <= 0.2;
        }
    }
    let lo = orders_seen.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = orders_seen.iter().copied().fold(0.0, f64::max);
    outcome(
        ok,
        format!("max relative error {worst_err:.2e} (<= 1e-6), observed order in [{lo:.3}, {hi:.3}] (2.0 ± 0.2)"),
    )
}

/// 7. Conjugation limit and John–Nirenberg at small norm.
fn conjugation() -> Outcome {
    let r = run_check(
        CheckKind::Conjugation,
        &config(json!({
            "grid": {"dim": 1, "depth": 8},
            "commuted": [0, 1],
            "operator": {"kind": "haar_multiplier", "alphas": [[0], [1], [0]]},
            "weights": {"kind": "random", "strength": 0.5},
            "trials": 50,
            "seed": 3
        })),
    )
    .unwrap();
    let worst = r.trials.iter().map(|t| (t.ratio - 1.0).abs()).fold(0.0, f64::max);
    let finite = r.trials.iter().all(|t| t.stats["max_ratio"].is_finite());
    let jn = r.trials.iter().map(|t| t.stats["exp_average"]).fold(0.0, f64::max);
    outcome(
        r.passed && worst <= 0.01 && finite && jn <= 2.0,
        format!("max |ratio - 1| at t = 2^-10 is {worst:.2e} (<= 0.01), sweep finite {finite}, max exponential average {jn:.4} (<= 2)"),
    )
}

/// 8. Lower bound: worked example, chain, dual weight identity.
fn lower_bound() -> Outcome {
    let g = DyadicGrid::new(1, 1).unwrap();
    let t = HaarSum::multiplier(&HaarMultiplierSpec {
        epsilon: Epsilon::constant(&g, 1.0),
        alphas: vec![alpha(&[0]), alpha(&[0]), alpha(&[0])],
    })
    .unwrap();
    let b = GridFunction::from_row_major(&g, vec![1.0, 0.0]).unwrap();
    let h = GridFunction::from_row_major(&g, vec![1.0, -1.0]).unwrap();
    let c = commutator_single(Arc::new(t), &b, 0).unwrap().apply(&[&h, &h]).unwrap().abs();
    let example = c.max_diff(&b.map(|v| (v - 0.5).abs()));

    let cfg = config(json!({
        "grid": {"dim": 1, "depth": 7},
        "commuted": [0],
        "exponents": [2.0, 3.0],
        "operator": {"kind": "haar_multiplier", "alphas": [[1], [0], [0]], "epsilon": {"fill": "ones"}},
        "weights": {"kind": "random", "strength": 0.4},
        "trials": 20,
        "seed": 8
    }));
    let r = run_check(CheckKind::LowerBound, &cfg).unwrap();
    let chain = r.trials.iter().all(|t| t.passed);
    let min_slack = r.min_slack().unwrap_or(f64::NAN);

    // ν_{w'} against ν_w^{1/(1-mp)}, computed here from the definitions
    let mut dual_err = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let gd = DyadicGrid::new(1, 7).unwrap();
    for _ in 0..20 {
        let ps = [rng.random_range(1.2..4.0), rng.random_range(1.2..4.0)];
        let w: Vec<GridFunction> = (0..2).map(|_| random_weight(&gd, &mut rng, 0.5)).collect();
        let inv_p: f64 = ps.iter().map(|p| 1.0 / p).sum();
        let p = 1.0 / inv_p;
        let pd: Vec<f64> = ps.iter().map(|&q| conjugate_exponent(q)).collect();
        let p_dual = 1.0 / pd.iter().map(|q| 1.0 / q).sum::<f64>();
        let nu_dual = weight_product(
            &WeightVector::new(
                (0..2).map(|j| dual_weight(&w[j], ps[j]).unwrap()).collect(),
                ExponentVector::new(pd.clone()).unwrap(),
            )
            .unwrap(),
        );
        for x in 0..gd.leaf_count() {
            let nu: f64 = (0..2).map(|j| w[j].values()[x].powf(p / ps[j])).product();
            let direct: f64 = (0..2)
                .map(|j| w[j].values()[x].powf(1.0 - pd[j]).powf(p_dual / pd[j]))
                .product();
            let target = nu.powf(1.0 / (1.0 - 2.0 * p));
            dual_err = dual_err.max((nu_dual.values()[x] - target).abs() / target);
            dual_err = dual_err.max((direct - target).abs() / target);
        }
    }
    outcome(
        example < 1e-12 && chain && dual_err < 1e-12,
        format!(
            "worked example error {example:.2e} (< 1e-12), chain holds on every J over {} trials {chain} (min slack {min_slack:.2e}), dual weight identity error {dual_err:.2e} (< 1e-12)",
            r.trials.len()
        ),
    )
}

/// `[w⃗]_{A_{r⃗}}` by direct summation over every cube.
fn ap_oracle(w: &[GridFunction], r: &[f64]) -> f64 {
    let g = w[0].grid();
    let rr = 1.0 / r.iter().map(|x| 1.0 / x).sum::<f64>();
    let mut best = 0.0f64;
    for q in g.all_cubes() {
        let n = g.leaf_range(&q).len() as f64;
        let mut nu = 0.0;
        for x in g.leaf_range(&q) {
            nu += (0..w.len()).map(|j| w[j].values()[x].powf(rr / r[j])).product::<f64>();
        }
        let mut val = (nu / n).powf(1.0 / rr);
        for j in 0..w.len() {
            let d = r[j] / (r[j] - 1.0);
            let s: f64 = g.leaf_range(&q).map(|x| w[j].values()[x].powf(1.0 - d)).sum();
            val *= (s / n).powf(1.0 / d);
        }
        best = best.max(val);
    }
    best.powf(rr)
}

/// 9. Weight algebra on 100 random product-weight trials.
fn weight_algebra() -> Outcome {
    let g = DyadicGrid::new(1, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = f64::INFINITY;
    let mut oracle_err = 0.0f64;
    for _ in 0..100 {
        let ps: Vec<f64> = (0..3).map(|_| rng.random_range(1.5..5.0)).collect();
        let mu: Vec<GridFunction> = (0..3).map(|_| random_weight(&g, &mut rng, 0.4)).collect();
        let mut lambda = mu.clone();
        lambda[0] = random_weight(&g, &mut rng, 0.4);
        lambda[1] = random_weight(&g, &mut rng, 0.4);
        let setup = BloomSetup::new(ExponentVector::new(ps.clone()).unwrap(), vec![0, 1], mu.clone(), lambda.clone()).unwrap();
        for block in [vec![0], vec![1], vec![0, 1]] {
            let chain = holder_chain(&setup, &block).unwrap();
            let mut ws: Vec<GridFunction> = block.iter().map(|&s| lambda[s].clone()).collect();
            let mut rs: Vec<f64> = block.iter().map(|&s| ps[s]).collect();
            ws.push(mu[2].clone());
            rs.push(ps[2]);
            let lhs = ap_oracle(&ws, &rs);
            oracle_err = oracle_err.max((lhs - chain.lhs).abs() / lhs);
            let r: f64 = 1.0 / rs.iter().map(|x| 1.0 / x).sum::<f64>();
            let mut log_rhs = ap_oracle(&[mu[2].clone()], &[ps[2]]).ln() * r / ps[2];
            for &s in &block {
                log_rhs += ap_oracle(&[lambda[s].clone()], &[ps[s]]).ln() * r / ps[s];
            }
            worst = worst.min(log_rhs - lhs.ln());
        }
    }
    outcome(
        worst >= -1e-10 && oracle_err < 1e-10,
        format!("min log-space slack {worst:.3e} (>= -1e-10), library vs direct characteristic {oracle_err:.2e}"),
    )
}

/// 10. Fast evaluation against naive summation at depth 12.
fn performance() -> Outcome {
    let g = DyadicGrid::new(1, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let t = HaarSum::multiplier(&HaarMultiplierSpec {
        epsilon: Epsilon::random_signs(&g, &mut rng),
        alphas: vec![alpha(&[0]), alpha(&[1]), alpha(&[0])],
    })
    .unwrap();
    let (f1, f2) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
    let f = [&f1, &f2];
    let fast = t.apply_fast(&f).unwrap();
    let naive = t.apply_naive(&f).unwrap();
    let err = fast.max_diff(&naive);
    let reps = 5;
    let s = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(t.apply_fast(&f).unwrap());
    }
    let fast_t = s.elapsed().as_secs_f64() / reps as f64;
    let s = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(t.apply_naive(&f).unwrap());
    }
    let naive_t = s.elapsed().as_secs_f64() / reps as f64;
    let speedup = naive_t / fast_t;
    outcome(
        err < 1e-10 && speedup >= 10.0,
        format!(
            "max difference {err:.2e} (< 1e-10), fast {:.3} ms vs naive {:.3} ms, speedup {speedup:.1}x (>= 10x)",
            fast_t * 1e3,
            naive_t * 1e3
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Haar orthonormality and Parseval", haar_system),
        ("commutator algebra", commutator_algebra),
        ("sparse domination certificates", sparse_domination),
        ("maximal truncation", maximal_truncation),
        ("Bloom two-weight bound", bloom_bound),
        ("Cauchy identity", cauchy_identity),
        ("conjugation of weights", conjugation),
        ("lower bound", lower_bound),
        ("weight algebra", weight_algebra),
        ("fast evaluation path", performance),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!("[{}] criterion {}: {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
