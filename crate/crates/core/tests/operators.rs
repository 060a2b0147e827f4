use std::sync::Arc;

use bloomlab::dyadic::{dyadic_maximal, haar_function};
use bloomlab::operators::*;
use bloomlab::{DyadicGrid, GridFunction, HaarIndex};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn alpha(a: &[u8]) -> HaarIndex {
    HaarIndex::new(a).unwrap()
}

fn random_fn(g: &DyadicGrid, rng: &mut ChaCha8Rng) -> GridFunction {
    let v = (0..g.leaf_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    GridFunction::from_storage(g, v).unwrap()
}

fn bilinear(g: &DyadicGrid, rng: &mut ChaCha8Rng, paraproduct: bool) -> Operator {
    let epsilon = Epsilon::random_signs(g, rng);
    if paraproduct {
        let symbol = random_fn(g, rng);
        Arc::new(
            HaarSum::paraproduct(&ParaproductSpec {
                symbol,
                epsilon,
                alphas: vec![alpha(&[0]), alpha(&[1]), alpha(&[0]), alpha(&[1])],
            })
            .unwrap(),
        )
    } else {
        Arc::new(
            HaarSum::multiplier(&HaarMultiplierSpec {
                epsilon,
                alphas: vec![alpha(&[0]), alpha(&[1]), alpha(&[0])],
            })
            .unwrap(),
        )
    }
}

fn max_rel(a: &GridFunction, b: &GridFunction) -> f64 {
    a.max_diff(b) / b.max_abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multilinear_in_each_slot(seed in any::<u64>(), para in any::<bool>(), c in -3.0f64..3.0) {
        let g = DyadicGrid::new(1, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = bilinear(&g, &mut rng, para);
        let (f1, f2, u) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng), random_fn(&g, &mut rng));
        for slot in 0..2 {
            let mixed = &f1.scale(c) + &u;
            let mut a = vec![&f1, &f2];
            a[slot] = &mixed;
            let lhs = t.apply(&a).unwrap();
            let mut b1 = vec![&f1, &f2];
            b1[slot] = &f1;
            let mut b2 = vec![&f1, &f2];
            b2[slot] = &u;
            let rhs = &t.apply(&b1).unwrap().scale(c) + &t.apply(&b2).unwrap();
            prop_assert!(max_rel(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn commutator_algebra(seed in any::<u64>(), para in any::<bool>(), c in -5.0f64..5.0) {
        let g = DyadicGrid::new(1, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = bilinear(&g, &mut rng, para);
        let b = random_fn(&g, &mut rng);
        let (f1, f2) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
        for slot in 0..2 {
            let base = commutator_single(t.clone(), &b, slot).unwrap().apply(&[&f1, &f2]).unwrap();
            let shifted = b.map(|v| v + c);
            let s = commutator_single(t.clone(), &shifted, slot).unwrap().apply(&[&f1, &f2]).unwrap();
            prop_assert!(max_rel(&s, &base) < 1e-12);
            let scaled = commutator_single(t.clone(), &b.scale(c), slot).unwrap().apply(&[&f1, &f2]).unwrap();
            prop_assert!(max_rel(&scaled, &base.scale(c)) < 1e-12);
        }
    }
}

#[test]
fn four_term_expansion_and_permutation_invariance() {
    let g = DyadicGrid::new(1, 7).unwrap();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = bilinear(&g, &mut rng, seed % 2 == 1);
        let (b1, b2) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
        let (f1, f2) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
        let spec_symbols = vec![vec![b1.clone()], vec![b2.clone()]];
        let c = wrap_commutators(t.clone(), &spec_symbols).unwrap().apply(&[&f1, &f2]).unwrap();
        let b1f1 = &b1 * &f1;
        let b2f2 = &b2 * &f2;
        let oracle = &(&(&(&(&b1 * &b2) * &t.apply(&[&f1, &f2]).unwrap())
            - &(&b2 * &t.apply(&[&b1f1, &f2]).unwrap()))
            - &(&b1 * &t.apply(&[&f1, &b2f2]).unwrap()))
            + &t.apply(&[&b1f1, &b2f2]).unwrap();
        assert!(max_rel(&c, &oracle) < 1e-12);

        // two symbols in the same slot, in both orders
        let b3 = random_fn(&g, &mut rng);
        let a = wrap_commutators(t.clone(), &[vec![b1.clone(), b3.clone()], vec![b2.clone()]]).unwrap();
        let b = wrap_commutators(t.clone(), &[vec![b3.clone(), b1.clone()], vec![b2.clone()]]).unwrap();
        let (ya, yb) = (a.apply(&[&f1, &f2]).unwrap(), b.apply(&[&f1, &f2]).unwrap());
        assert!(max_rel(&ya, &yb) < 1e-12);
    }
}

#[test]
fn iterated_commutator_degenerate_cases() {
    let g = DyadicGrid::new(1, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = HaarMultiplierSpec {
        epsilon: Epsilon::random_signs(&g, &mut rng),
        alphas: vec![alpha(&[0]), alpha(&[0]), alpha(&[1])],
    };
    let b = random_fn(&g, &mut rng);
    let (f1, f2) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
    let base = bloomlab::operators::BaseSpec::HaarMultiplier(spec.clone());
    let none = CommutatorSpec { base: base.clone(), orders: vec![0, 0], symbols: vec![vec![], vec![]] };
    let t = HaarSum::multiplier(&spec).unwrap();
    assert_eq!(
        build_iterated_commutator(&none).unwrap().apply(&[&f1, &f2]).unwrap(),
        t.apply(&[&f1, &f2]).unwrap()
    );
    let one = CommutatorSpec { base, orders: vec![0, 1], symbols: vec![vec![], vec![b.clone()]] };
    let single = commutator_single(Arc::new(t), &b, 1).unwrap();
    assert_eq!(
        build_iterated_commutator(&one).unwrap().apply(&[&f1, &f2]).unwrap(),
        single.apply(&[&f1, &f2]).unwrap()
    );
    let bad = CommutatorSpec { orders: vec![1, 1], ..one };
    assert!(bad.validate(2).is_err());
}

#[test]
fn conjugated_family_at_zero_and_first_derivative() {
    let g = DyadicGrid::new(1, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = bilinear(&g, &mut rng, false);
    let b = random_fn(&g, &mut rng);
    let (f1, f2) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
    let (c1, c2) = (f1.to_complex(), f2.to_complex());
    let symbols = vec![vec![b.clone()], vec![]];
    let at = |z: f64| {
        conjugated_family(t.as_ref(), &symbols, &[vec![Complex64::new(z, 0.0)], vec![]], &[&c1, &c2]).unwrap()
    };
    let f0 = at(0.0);
    assert!(f0.re().max_diff(&t.apply(&[&f1, &f2]).unwrap()) < 1e-14);
    let comm = commutator_single(t.clone(), &b, 0).unwrap().apply(&[&f1, &f2]).unwrap();
    let mut errs = Vec::new();
    for h in [1e-2, 5e-3] {
        let d = (&at(h) - &at(-h)).scale(Complex64::new(0.5 / h, 0.0)).re();
        errs.push(d.max_diff(&comm) / comm.max_abs());
    }
    // second order: halving h divides the error by about 4
    let order = (errs[0] / errs[1]).log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}, errors {errs:?}");
}

#[test]
fn maximal_truncation_support_localization() {
    let g = DyadicGrid::new(1, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let t = HaarSum::multiplier(&HaarMultiplierSpec {
        epsilon: Epsilon::random_signs(&g, &mut rng),
        alphas: vec![alpha(&[0]), alpha(&[1]), alpha(&[0])],
    })
    .unwrap();
    let i = g.cube(3, &[5]).unwrap();
    let h = haar_function(&g, &i, &alpha(&[0])).unwrap();
    let f2 = random_fn(&g, &mut rng);
    let sharp = t.maximal_truncation(&[&h, &f2]).unwrap();
    let range = g.leaf_range(&i);
    for (x, v) in sharp.values().iter().enumerate() {
        if !range.contains(&x) {
            assert_eq!(*v, 0.0);
        }
    }
    let m = dyadic_maximal(&t.apply(&[&h, &f2]).unwrap());
    assert!(sharp.values().iter().zip(m.values()).all(|(a, b)| b - a >= -1e-12));
}

#[test]
fn depth12_fast_path_matches_naive() {
    let g = DyadicGrid::new(1, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = HaarSum::multiplier(&HaarMultiplierSpec {
        epsilon: Epsilon::random_signs(&g, &mut rng),
        alphas: vec![alpha(&[0]), alpha(&[0]), alpha(&[1])],
    })
    .unwrap();
    let (f1, f2) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
    let fast = t.apply(&[&f1, &f2]).unwrap();
    let slow = t.apply_naive(&[&f1, &f2]).unwrap();
    assert!(fast.max_diff(&slow) < 1e-10);
}
