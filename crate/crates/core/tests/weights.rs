use bloomlab::dyadic::average;
use bloomlab::weights::{
    ap_characteristic, conjugate_weight, dual_weight, john_nirenberg_check, multilinear_ap_characteristic,
    weighted_bmo_norm, ExponentVector, WeightVector,
};
use bloomlab::{DyadicGrid, GridFunction};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn positive_fn(g: &DyadicGrid, rng: &mut ChaCha8Rng) -> GridFunction {
    let v = (0..g.leaf_count()).map(|_| rng.random_range(-1.5f64..1.5).exp()).collect();
    GridFunction::from_storage(g, v).unwrap()
}

fn mean(vals: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = vals.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

fn ap_oracle(w: &GridFunction, p: f64) -> f64 {
    let g = w.grid();
    g.all_cubes()
        .map(|q| {
            let vals = w.on(&q);
            mean(vals.iter().copied()) * mean(vals.iter().map(|v| v.powf(-1.0 / (p - 1.0)))).powf(p - 1.0)
        })
        .fold(0.0, f64::max)
}

fn bmo_oracle(b: &GridFunction, nu: &GridFunction) -> f64 {
    let g = b.grid();
    g.all_cubes()
        .map(|q| {
            let avg = average(b, &q).unwrap();
            let osc: f64 = b.on(&q).iter().map(|v| (v - avg).abs()).sum();
            osc / nu.on(&q).iter().sum::<f64>()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ap_characteristic_matches_brute_force(seed in any::<u64>(), dim in 1usize..=2, p in 1.2f64..5.0) {
        let g = DyadicGrid::new(dim, 4).unwrap();
        let w = positive_fn(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        let fast = ap_characteristic(&w, p).unwrap();
        prop_assert!((fast - ap_oracle(&w, p)).abs() < 1e-10 * fast);
        prop_assert!(fast >= 1.0 - 1e-12);
        // dilation invariance
        prop_assert!((ap_characteristic(&w.scale(7.0), p).unwrap() - fast).abs() < 1e-10 * fast);
    }

    #[test]
    fn bmo_norm_matches_brute_force(seed in any::<u64>(), c in -4.0f64..4.0) {
        let g = DyadicGrid::new(1, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = positive_fn(&g, &mut rng).map(f64::ln);
        let nu = positive_fn(&g, &mut rng);
        let n = weighted_bmo_norm(&b, Some(&nu)).unwrap();
        prop_assert!((n - bmo_oracle(&b, &nu)).abs() < 1e-12 * n.max(1.0));
        let shifted = weighted_bmo_norm(&b.map(|v| v + c), Some(&nu)).unwrap();
        prop_assert!((shifted - n).abs() < 1e-12 * n.max(1.0));
        let scaled = weighted_bmo_norm(&b.scale(c), Some(&nu)).unwrap();
        prop_assert!((scaled - c.abs() * n).abs() < 1e-12 * n.max(1.0));
    }

    #[test]
    fn dual_weight_duality(seed in any::<u64>(), p in 1.2f64..5.0) {
        let g = DyadicGrid::new(1, 5).unwrap();
        let w = positive_fn(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        let d = dual_weight(&w, p).unwrap();
        let pp = p / (p - 1.0);
        // [σ]_{A_{p'}} = [w]_{A_p}^{p'-1}
        let lhs = ap_characteristic(&d, pp).unwrap();
        let rhs = ap_characteristic(&w, p).unwrap().powf(pp - 1.0);
        prop_assert!((lhs - rhs).abs() < 1e-10 * rhs);
    }
}

#[test]
fn multilinear_characteristic_with_one_slot_is_ap() {
    let g = DyadicGrid::new(1, 6).unwrap();
    let w = positive_fn(&g, &mut ChaCha8Rng::seed_from_u64(2));
    let wv = WeightVector::new(vec![w.clone()], ExponentVector::new(vec![3.0]).unwrap()).unwrap();
    let a = multilinear_ap_characteristic(&wv);
    assert!((a - ap_characteristic(&w, 3.0).unwrap()).abs() < 1e-10 * a);
}

#[test]
fn two_point_characteristic() {
    // depth 1, w = (1, 4): root ⟨w⟩ = 5/2, ⟨w^{-1}⟩ = 5/8
    let g = DyadicGrid::new(1, 1).unwrap();
    let w = GridFunction::from_row_major(&g, vec![1.0, 4.0]).unwrap();
    assert!((ap_characteristic(&w, 2.0).unwrap() - 25.0 / 16.0).abs() < 1e-14);
}

#[test]
fn john_nirenberg_and_conjugation_at_zero() {
    let g = DyadicGrid::new(1, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let jn = john_nirenberg_check(&GridFunction::constant(&g, 3.0));
    assert_eq!(jn.bmo_norm, 0.0);
    assert!((jn.exp_average - 1.0).abs() < 1e-15);
    let w = positive_fn(&g, &mut rng);
    let b = positive_fn(&g, &mut rng).map(f64::ln);
    assert_eq!(conjugate_weight(&w, &b, Complex64::new(0.0, 0.0), 2.0).unwrap(), w);
    // only Re(z) enters
    let v = conjugate_weight(&w, &b, Complex64::new(0.3, 5.0), 2.0).unwrap();
    let oracle = w.zip_map(&b, |wv, bv| wv * (0.6 * bv).exp()).unwrap();
    assert!(v.max_diff(&oracle) < 1e-12 * oracle.max_abs());
}
