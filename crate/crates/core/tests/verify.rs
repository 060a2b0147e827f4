use base64::Engine;
use bloomlab::verify::*;
use bloomlab::weights::{ap_characteristic, multilinear_ap_characteristic, weighted_bmo_norm, WeightVector};
use bloomlab::{DyadicGrid, Error, GridFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn cfg(v: Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&v.to_string()).unwrap()
}

fn bilinear(depth: u32, commuted: Value, trials: usize) -> Value {
    json!({
        "grid": {"dim": 1, "depth": depth},
        "commuted": commuted,
        "operator": {"kind": "haar_multiplier", "alphas": [[0], [1], [0]]},
        "trials": trials,
        "seed": 11
    })
}

fn with(mut base: Value, key: &str, v: Value) -> Value {
    base[key] = v;
    base
}

#[test]
fn config_schema_errors() {
    let good = bilinear(5, json!([0]), 2);
    assert!(ExperimentConfig::from_json(&good.to_string()).is_ok());
    for bad in [
        with(good.clone(), "trials", json!(0)),
        with(good.clone(), "bogus", json!(1)),
        with(good.clone(), "commuted", json!([2])),
        with(good.clone(), "exponents", json!([2.0])),
        with(good.clone(), "grid", json!({"dim": 3, "depth": 2})),
        with(good.clone(), "orders", json!([2, 2])),
    ] {
        assert!(matches!(ExperimentConfig::from_json(&bad.to_string()), Err(Error::Config(_))), "{bad}");
    }
    let c = cfg(good).with_overrides(Some(3), Some(4), Some(7)).unwrap();
    assert_eq!((c.seed, c.grid.depth, c.trials), (3, 4, 7));
    assert!(matches!(cfg(bilinear(5, json!([0]), 2)).with_overrides(None, Some(0), None), Err(Error::Config(_))));
}

#[test]
fn random_weight_examples() {
    let g = DyadicGrid::new(1, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(random_weight(&g, &mut rng, 0.0).values().iter().all(|v| *v == 1.0));
    let a = random_weight(&g, &mut ChaCha8Rng::seed_from_u64(4), 0.3);
    let b = random_weight(&g, &mut ChaCha8Rng::seed_from_u64(4), 0.3);
    assert_eq!(a, b);
    for seed in 0..10 {
        let w = random_weight(&g, &mut ChaCha8Rng::seed_from_u64(seed), 0.1);
        let c = ap_characteristic(&w, 2.0).unwrap();
        assert!((1.0..=2.0).contains(&c), "{c}");
    }
}

#[test]
fn random_symbol_examples() {
    let g = DyadicGrid::new(2, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    assert!(random_bmo_symbol(&g, &mut rng, 0.0, 0.5, None).unwrap().is_zero());
    for c in [0.1, 1.0, 3.5] {
        let b = random_bmo_symbol(&g, &mut rng, c, 0.5, None).unwrap();
        assert!((weighted_bmo_norm(&b, None).unwrap() - c).abs() < 1e-10);
        let shifted = b.map(|v| v + 2.0);
        assert!((weighted_bmo_norm(&shifted, None).unwrap() - c).abs() < 1e-10);
    }
}

fn run(kind: CheckKind, v: Value) -> CheckReport {
    run_check(kind, &cfg(v)).unwrap()
}

fn assert_pass(r: &CheckReport) {
    assert!(r.passed, "{}", r.summary_line());
}

#[test]
fn domination_check_multiplier_and_paraproduct() {
    let r = run(CheckKind::Domination, bilinear(6, json!([0, 1]), 6));
    assert_pass(&r);
    assert!(r.trials.iter().all(|t| t.constant.unwrap() >= t.lhs));
    let para = json!({
        "grid": {"dim": 1, "depth": 6},
        "commuted": [0, 1],
        "operator": {"kind": "paraproduct", "alphas": [[0], [0], [1], [0]]},
        "trials": 4,
        "seed": 2
    });
    assert_pass(&run(CheckKind::Domination, para));
    let two_d = json!({
        "grid": {"dim": 2, "depth": 3},
        "commuted": [1],
        "operator": {"kind": "haar_multiplier", "alphas": [[0, 1], [1, 1], [0, 1]]},
        "trials": 3,
        "seed": 5
    });
    assert_pass(&run(CheckKind::Domination, two_d));
}

#[test]
fn bloom_zero_symbols_give_zero_ratio() {
    let v = with(bilinear(5, json!([0, 1]), 4), "symbols", json!({"kind": "zero"}));
    let r = run(CheckKind::Bloom, v);
    assert_pass(&r);
    assert!(r.trials.iter().all(|t| t.ratio == 0.0 && t.lhs == 0.0));
}

#[test]
fn bloom_calibrated_weights() {
    let v = with(
        bilinear(6, json!([0]), 6),
        "weights",
        json!({"kind": "random", "strength": 0.5, "max_characteristic": 4.0}),
    );
    let r = run(CheckKind::Bloom, v);
    assert_pass(&r);
    for t in &r.trials {
        assert!(t.ratio.is_finite());
        assert!(t.characteristics["mu[0]"] <= 4.0 + 1e-12);
        assert!(t.characteristics["lambda[0]"] <= 4.0 + 1e-12);
        // unit Bloom-BMO norm of the generated symbol
        assert!((t.bmo_norms[0] - 1.0).abs() < 1e-10);
    }
}

fn weight_file(dir: &std::path::Path, name: &str, g: &DyadicGrid, f: impl Fn(usize) -> f64) -> Value {
    let vals = (0..g.leaf_count()).map(f).collect();
    let w = GridFunction::from_row_major(g, vals).unwrap();
    std::fs::write(dir.join(name), serde_json::to_string(&w).unwrap()).unwrap();
    json!({"path": name})
}

#[test]
fn bloom_ratio_invariant_under_common_weight_scaling() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let g = DyadicGrid::new(1, 5).unwrap();
    let mut reports = Vec::new();
    for c in [1.0, 7.5] {
        let mu = vec![
            weight_file(dir, &format!("mu0_{c}.json"), &g, |i| c * (1.0 + (i as f64 * 0.7).sin().powi(2))),
            weight_file(dir, &format!("mu1_{c}.json"), &g, |i| c * (2.0 + (i as f64 * 0.3).cos())),
        ];
        let lambda = vec![
            weight_file(dir, &format!("la0_{c}.json"), &g, |i| c * (1.0 + 0.5 * (i as f64 * 1.1).cos().powi(2))),
            mu[1].clone(),
        ];
        let mut v = with(bilinear(5, json!([0]), 3), "weights", json!({"kind": "functions", "mu": mu, "lambda": lambda}));
        v["symbols"] = json!({"kind": "functions", "functions": [weight_file(dir, "b.json", &g, |i| (i * 7 % 5) as f64)]});
        let path = dir.join(format!("cfg_{c}.json"));
        std::fs::write(&path, v.to_string()).unwrap();
        reports.push(run_check(CheckKind::Bloom, &ExperimentConfig::load(&path).unwrap()).unwrap());
    }
    for (a, b) in reports[0].trials.iter().zip(&reports[1].trials) {
        assert!(a.ratio > 0.0);
        assert!((a.ratio - b.ratio).abs() <= 1e-10 * a.ratio, "{} vs {}", a.ratio, b.ratio);
    }
}

#[test]
fn bloom_without_commuted_slots_uses_the_multilinear_constant() {
    let v = with(
        with(bilinear(5, json!([]), 3), "weights", json!({"kind": "random", "strength": 0.4})),
        "exponents",
        json!([2.0, 3.0]),
    );
    let c = cfg(v);
    let r = run_check(CheckKind::Bloom, &c).unwrap();
    assert_pass(&r);
    for t in &r.trials {
        let inst = TrialInstance::generate(&c, 5, t.trial).unwrap();
        let wv = WeightVector::new(inst.mu.clone(), inst.exponents.clone()).unwrap();
        let p = inst.exponents.p();
        let expo = inst.exponents.duals().into_iter().fold(p, f64::max) / p;
        let expected = multilinear_ap_characteristic(&wv).powf(expo);
        assert!((t.constant.unwrap() - expected).abs() <= 1e-12 * expected);
    }
}

#[test]
fn lower_bound_check() {
    let v = with(
        with(bilinear(5, json!([0]), 4), "weights", json!({"kind": "random", "strength": 0.3})),
        "operator",
        json!({"kind": "haar_multiplier", "alphas": [[0], [0], [0]], "epsilon": {"fill": "ones"}}),
    );
    let r = run(CheckKind::LowerBound, v.clone());
    assert_pass(&r);
    for t in &r.trials {
        assert!(t.stats["exact_error"] < 1e-12);
        assert!(t.stats["dual_weight_error"] < 1e-12);
    }
    // unweighted: the recovered oscillation never exceeds the BMO norm
    let unweighted = with(v.clone(), "weights", json!({"kind": "unit"}));
    for t in run(CheckKind::LowerBound, unweighted).trials {
        assert!(t.stats["jensen_ratio"] <= 1.0 + 1e-12);
    }
    let small_eps = with(
        v.clone(),
        "operator",
        json!({"kind": "haar_multiplier", "alphas": [[0], [0], [0]], "epsilon": {"fill": "constant", "value": 0.5}}),
    );
    assert!(matches!(run_check(CheckKind::LowerBound, &cfg(small_eps)), Err(Error::Config(_))));
    let no_cancel = with(v, "operator", json!({"kind": "haar_multiplier", "alphas": [[0], [1], [0]]}));
    assert!(matches!(run_check(CheckKind::LowerBound, &cfg(no_cancel)), Err(Error::Config(_))));
}

#[test]
fn cauchy_check_orders() {
    let zero = with(bilinear(5, json!([]), 2), "orders", json!([0, 0]));
    let r = run(CheckKind::Cauchy, zero);
    assert_pass(&r);
    assert!(r.trials.iter().all(|t| t.lhs == 0.0));
    for orders in [json!([1, 0]), json!([0, 1]), json!([1, 1]), json!([2, 0])] {
        let v = with(bilinear(6, json!([]), 3), "orders", orders.clone());
        let r = run(CheckKind::Cauchy, v);
        assert_pass(&r);
        for t in &r.trials {
            assert!(t.lhs <= 1e-6, "{orders}: {}", t.lhs);
            assert!((t.stats["order"] - 2.0).abs() <= 0.2, "{orders}: {}", t.stats["order"]);
        }
    }
}

#[test]
fn conjugation_check() {
    let v = with(
        bilinear(6, json!([0, 1]), 4),
        "weights",
        json!({"kind": "random", "strength": 0.3}),
    );
    let r = run(CheckKind::Conjugation, v.clone());
    assert_pass(&r);
    for t in &r.trials {
        assert!((t.ratio - 1.0).abs() <= 0.01);
        assert!(t.stats["exp_average"] <= 2.0);
    }
    // a zero symbol leaves its slot untouched: the sweep is trivial
    let zero = with(v, "symbols", json!({"kind": "zero"}));
    for t in run(CheckKind::Conjugation, zero).trials {
        assert_eq!(t.ratio, 1.0);
        assert_eq!(t.stats["max_ratio"], 1.0);
    }
}

#[test]
fn maximal_check() {
    let r = run(CheckKind::Maximal, bilinear(7, json!([]), 6));
    assert_pass(&r);
    assert!(r.trials.iter().all(|t| t.min_slack.unwrap() >= -1e-12));
    let zero = with(bilinear(4, json!([]), 2), "inputs", json!({"kind": "functions", "functions": [
        GridFunction::<f64>::zeros(&DyadicGrid::new(1, 4).unwrap()),
        GridFunction::constant(&DyadicGrid::new(1, 4).unwrap(), 1.0)
    ]}));
    let r = run(CheckKind::Maximal, zero);
    assert!(r.passed && r.trials.iter().all(|t| t.skipped));
}

#[test]
fn maximal_depth_one_example() {
    // T(f1, f2) = ⟨f1,h⟩⟨f2,χ⟩ h on [0,1), f1 = h, f2 = 1
    let g = DyadicGrid::new(1, 1).unwrap();
    let h = GridFunction::from_row_major(&g, vec![1.0, -1.0]).unwrap();
    let one = GridFunction::constant(&g, 1.0);
    let v = with(
        with(bilinear(1, json!([]), 1), "inputs", json!({"kind": "functions", "functions": [h, one]})),
        "operator",
        json!({"kind": "haar_multiplier", "alphas": [[0], [1], [0]], "epsilon": {"fill": "ones"}}),
    );
    let r = run(CheckKind::Maximal, v);
    assert_pass(&r);
    assert!((r.trials[0].ratio - 1.0).abs() < 1e-12, "{}", r.trials[0].ratio);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let v = with(bilinear(6, json!([0]), 6), "depths", json!([5, 6]));
    let c = cfg(with(v, "weights", json!({"kind": "random"})));
    for kind in CheckKind::ALL {
        let kind_cfg = if kind == CheckKind::LowerBound {
            let mut k = c.clone();
            k.operator = cfg(json!({"grid": {"dim": 1, "depth": 5}, "operator": {"kind": "haar_multiplier",
                "alphas": [[0], [0], [0]], "epsilon": {"fill": "ones"}}, "trials": 1, "seed": 0})).operator;
            k
        } else {
            c.clone()
        };
        let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        let one = pool(1).install(|| run_check(kind, &kind_cfg).unwrap());
        let four = pool(4).install(|| run_check(kind, &kind_cfg).unwrap());
        assert_eq!(one.trials, four.trials, "{}", kind.name());
        assert_eq!(one.depths, four.depths);
    }
}

#[test]
fn certificate_round_trip_and_tampering() {
    let c = cfg(bilinear(6, json!([0, 1]), 1));
    let cert = domination_certificate(&c).unwrap();
    let text = serde_json::to_string(&cert).unwrap();
    let back = Certificate::from_json(&text).unwrap();
    assert_eq!(back, cert);
    let check = verify_certificate(&back, 1e-10).unwrap();
    assert!(check.passed, "{check:?}");
    assert!(check.min_slack.unwrap() >= -1e-10);
    assert_eq!(check.min_slack.unwrap(), cert.min_slack);

    // give the root every leaf as witness: it overlaps every other witness
    let mut bad = cert.clone();
    assert!(bad.collection.cubes.len() > 1);
    let i = bad.collection.cubes.iter().position(|q| q == "0:0").unwrap();
    bad.collection.witness_bitsets[i] = base64::engine::general_purpose::STANDARD.encode([0xffu8; 8]);
    let check = verify_certificate(&bad, 1e-10).unwrap();
    assert!(!check.passed);
    let msg = check.failure.unwrap();
    assert!(msg.contains("overlap") && msg.contains("0:0"), "{msg}");

    // a constant too small breaks the pointwise bound
    let mut weak = cert.clone();
    weak.constant = cert.realized_constant * 0.5;
    assert!(!verify_certificate(&weak, 1e-10).unwrap().passed);
}

#[test]
fn gen_instance_is_deterministic() {
    let c = cfg(with(bilinear(5, json!([1]), 1), "weights", json!({"kind": "random"})));
    let a = serde_json::to_string(&gen_instance(&c).unwrap()).unwrap();
    let b = serde_json::to_string(&gen_instance(&c).unwrap()).unwrap();
    assert_eq!(a, b);
    let back = Instance::from_json(&a).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), a);
}

#[test]
fn martingale_inputs() {
    let c = cfg(with(bilinear(6, json!([0]), 1), "inputs", json!({"kind": "martingale"})));
    let inst = gen_instance(&c).unwrap();
    for f in &inst.inputs {
        // six ±1 steps per leaf: integer values of even parity, mean zero
        assert!(f.values().iter().all(|v| v.abs() <= 6.0 + 1e-12 && (v / 2.0 - (v / 2.0).round()).abs() < 1e-12));
        assert!(f.integral().abs() < 1e-12);
    }
    assert!(run_check(CheckKind::Bloom, &c).unwrap().passed);
}
