use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::random::random_input;
use crate::dyadic::{haar_function, lp_norm, GridFunction, HaarIndex};
use crate::error::Result;
use crate::operators::MultilinearOperator;
use crate::weights::BloomSetup;

/// Ascent steps per slot when every `p_j = 2`.
const ASCENT_STEPS: usize = 6;

fn ratio(op: &dyn MultilinearOperator, setup: &BloomSetup, nu: &GridFunction, f: &[GridFunction]) -> Result<f64> {
    let mut denom = 1.0;
    for (j, fj) in f.iter().enumerate() {
        denom *= lp_norm(fj, setup.exponents().get(j), Some(setup.mu().weight(j)))?;
    }
    if denom == 0.0 {
        return Ok(0.0);
    }
    let refs: Vec<&GridFunction> = f.iter().collect();
    Ok(lp_norm(&op.apply(&refs)?, setup.exponents().p(), Some(nu))? / denom)
}

/// The Haar test inputs `f_j = |J|^{1/2} h_J^{α_j}` for a cube `J`.
pub fn haar_test_inputs(grid: &crate::DyadicGrid, j: &crate::Cube, alphas: &[HaarIndex]) -> Result<Vec<GridFunction>> {
    let root = j.measure().sqrt();
    alphas.iter().map(|a| Ok(haar_function(grid, j, a)?.scale(root))).collect()
}

/// Lower estimate of `‖T‖_{L^{p_1}(μ_1)×⋯→L^p(ν_λ)}`: running max over the
/// Haar test inputs of every cube (when `alphas` is given) and `trials` random
/// inputs, each refined by coordinate ascent when every `p_j = 2`.
///
/// Trial `i` draws from its own stream of `seed`, so the estimate is
/// nondecreasing in `trials`.
pub fn estimate_operator_norm(
    op: &dyn MultilinearOperator,
    setup: &BloomSetup,
    trials: usize,
    seed: u64,
    alphas: Option<&[HaarIndex]>,
) -> Result<f64> {
    let grid = op.grid();
    let nu = setup.target_weight();
    let mut best = 0.0f64;
    if let Some(a) = alphas {
        for k in 0..grid.depth() {
            for j in grid.level_cubes(k) {
                best = best.max(ratio(op, setup, &nu, &haar_test_inputs(grid, &j, a)?)?);
            }
        }
    }
    let hilbert = setup.exponents().as_slice().iter().all(|p| *p == 2.0);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let mut f: Vec<GridFunction> = (0..op.arity()).map(|_| random_input(grid, &mut rng)).collect();
        let mut r = ratio(op, setup, &nu, &f)?;
        if hilbert {
            for _ in 0..ASCENT_STEPS {
                for j in 0..f.len() {
                    let step = random_input(grid, &mut rng).scale(0.5 * rng.random::<f64>());
                    let mut cand = f.clone();
                    cand[j] = &f[j] + &step;
                    let rc = ratio(op, setup, &nu, &cand)?;
                    if rc > r {
                        r = rc;
                        f = cand;
                    }
                }
            }
        }
        best = best.max(r);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{Epsilon, HaarMultiplierSpec, HaarSum};
    use crate::weights::ExponentVector;
    use crate::DyadicGrid;

    #[test]
    fn identity_like_multiplier() {
        let g = DyadicGrid::new(1, 5).unwrap();
        let a = HaarIndex::new(&[0]).unwrap();
        let t = HaarSum::multiplier(&HaarMultiplierSpec {
            epsilon: Epsilon::constant(&g, 1.0),
            alphas: vec![a, a],
        })
        .unwrap();
        let setup = BloomSetup::unweighted(&g, ExponentVector::new(vec![2.0]).unwrap(), vec![]).unwrap();
        let few = estimate_operator_norm(&t, &setup, 2, 5, None).unwrap();
        let many = estimate_operator_norm(&t, &setup, 12, 5, None).unwrap();
        assert!(few <= many && many <= 1.0 + 1e-12);
        let with_haar = estimate_operator_norm(&t, &setup, 0, 5, Some(&[a])).unwrap();
        assert!((with_haar - 1.0).abs() < 1e-12);
        let zero = HaarSum::multiplier(&HaarMultiplierSpec {
            epsilon: Epsilon::constant(&g, 0.0),
            alphas: vec![a, a],
        })
        .unwrap();
        assert_eq!(estimate_operator_norm(&zero, &setup, 4, 1, Some(&[a])).unwrap(), 0.0);
    }
}
