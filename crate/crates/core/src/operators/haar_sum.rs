//! Haar multipliers and paraproducts as one engine: `Σ_I c_I ∏_j ⟨f_j, h_I^{α_j}⟩ h_I^{α_out}`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::{ApplyScalar, MultilinearOperator};
use crate::dyadic::{
    coefficients_from_pyramid, haar_coefficient, haar_coefficients, haar_function, haar_synthesis,
    Cube, DyadicGrid, GridFunction, HaarIndex,
};
use crate::error::{config, domain, Result};
use crate::scalar::Scalar;
use crate::weights::weighted_bmo_norm;

/// Coefficients `ε_I` on every non-leaf cube, stored `[level][pos]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Epsilon {
    grid: DyadicGrid,
    values: Vec<Vec<f64>>,
}

impl Epsilon {
    pub fn constant(grid: &DyadicGrid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: (0..grid.depth()).map(|k| vec![c; grid.cubes_at(k)]).collect(),
        }
    }

    /// Independent uniform signs in `{-1, +1}`.
    pub fn random_signs(grid: &DyadicGrid, rng: &mut impl Rng) -> Self {
        Self {
            grid: grid.clone(),
            values: (0..grid.depth())
                .map(|k| {
                    (0..grid.cubes_at(k))
                        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                        .collect()
                })
                .collect(),
        }
    }

    /// Overrides keyed by `"level:i,j"`.
    pub fn with_overrides(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        for (key, &v) in overrides {
            let q = Cube::parse(&self.grid, key)?;
            if q.level() >= self.grid.depth() {
                return Err(config(format!("epsilon key {key} is a leaf cube")));
            }
            if !v.is_finite() {
                return Err(config(format!("epsilon at {key} is not finite")));
            }
            self.values[q.level() as usize][q.pos()] = v;
        }
        Ok(self)
    }

    pub fn get(&self, q: &Cube) -> f64 {
        self.values[q.level() as usize][q.pos()]
    }

    pub fn set(&mut self, q: &Cube, v: f64) {
        self.values[q.level() as usize][q.pos()] = v;
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().flatten().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    /// Nonzero entries keyed by `"level:i,j"`.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (k, lvl) in self.values.iter().enumerate() {
            for (p, &v) in lvl.iter().enumerate() {
                if v != 0.0 {
                    out.insert(self.grid.cube_at(k as u32, p).to_string(), v);
                }
            }
        }
        out
    }
}

/// `P_ε^α(f⃗) = Σ_I ε_I ∏_j ⟨f_j, h_I^{α_j}⟩ h_I^{α_{m+1}} |I|^{-(m-1)/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarMultiplierSpec {
    pub epsilon: Epsilon,
    /// `(α_1, …, α_{m+1})`; the last entry is the output index.
    pub alphas: Vec<HaarIndex>,
}

/// `π_{g,ε}^α(f⃗) = Σ_I ε_I ⟨g, h_I^{α_1}⟩ ∏_j ⟨f_j, h_I^{α_{j+1}}⟩ h_I^{α_{m+2}} |I|^{-m/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParaproductSpec {
    pub symbol: GridFunction,
    pub epsilon: Epsilon,
    /// `(α_1, …, α_{m+2})`; `α_1` pairs with the symbol, the last is the output.
    pub alphas: Vec<HaarIndex>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HaarSumKind {
    Multiplier,
    Paraproduct,
}

/// A dyadic operator `f⃗ ↦ Σ_{I, level < D} c_I ∏_j ⟨f_j, h_I^{α_j}⟩ h_I^{α_out}`.
#[derive(Clone, Debug)]
pub struct HaarSum {
    grid: DyadicGrid,
    kind: HaarSumKind,
    inputs: Vec<HaarIndex>,
    output: HaarIndex,
    coeff: Vec<Vec<f64>>,
    epsilon_sup: f64,
    symbol_bmo: Option<f64>,
}

fn check_alphas(grid: &DyadicGrid, alphas: &[HaarIndex]) -> Result<()> {
    if let Some(a) = alphas.iter().find(|a| a.dim() != grid.dim()) {
        return Err(domain(format!(
            "Haar index {a} does not match grid dimension {}",
            grid.dim()
        )));
    }
    Ok(())
}

impl HaarSum {
    pub fn multiplier(spec: &HaarMultiplierSpec) -> Result<Self> {
        let grid = spec.epsilon.grid().clone();
        let m = spec.alphas.len().checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| {
            domain("a Haar multiplier needs at least two Haar indices")
        })?;
        check_alphas(&grid, &spec.alphas)?;
        if spec.alphas.iter().filter(|a| a.is_cancellative()).count() < 2 {
            return Err(domain(
                "a Haar multiplier needs at least two cancellative indices",
            ));
        }
        let coeff = spec
            .epsilon
            .levels()
            .iter()
            .enumerate()
            .map(|(k, lvl)| {
                let s = grid.level_measure(k as u32).powf(-((m - 1) as f64) / 2.0);
                lvl.iter().map(|e| e * s).collect()
            })
            .collect();
        Ok(Self {
            kind: HaarSumKind::Multiplier,
            inputs: spec.alphas[..m].to_vec(),
            output: spec.alphas[m],
            coeff,
            epsilon_sup: spec.epsilon.sup(),
            symbol_bmo: None,
            grid,
        })
    }

    /// Admissible paraproduct: `α_1` and at least one further index cancellative.
    pub fn paraproduct(spec: &ParaproductSpec) -> Result<Self> {
        if spec.alphas.first().is_some_and(|a| !a.is_cancellative()) {
            return Err(domain("the symbol index of a paraproduct must be cancellative"));
        }
        if spec.alphas.len() >= 2 && !spec.alphas[1..].iter().any(|a| a.is_cancellative()) {
            return Err(domain(
                "a paraproduct needs a cancellative index besides the symbol's",
            ));
        }
        Self::paraproduct_sum(spec)
    }

    /// The paraproduct's defining sum for arbitrary Haar indices, without the
    /// admissibility conditions.
    pub fn paraproduct_sum(spec: &ParaproductSpec) -> Result<Self> {
        let grid = spec.epsilon.grid().clone();
        spec.symbol.ensure_same_grid(&GridFunction::<f64>::zeros(&grid))?;
        let m = spec.alphas.len().checked_sub(2).filter(|&m| m >= 1).ok_or_else(|| {
            domain("a paraproduct needs at least three Haar indices")
        })?;
        check_alphas(&grid, &spec.alphas)?;
        let mut g = haar_coefficients(&spec.symbol, &spec.alphas[0]);
        g.truncate(grid.depth() as usize);
        let coeff = spec
            .epsilon
            .levels()
            .iter()
            .enumerate()
            .map(|(k, lvl)| {
                let s = grid.level_measure(k as u32).powf(-(m as f64) / 2.0);
                lvl.iter().zip(&g[k]).map(|(e, gc)| e * gc * s).collect()
            })
            .collect();
        Ok(Self {
            kind: HaarSumKind::Paraproduct,
            inputs: spec.alphas[1..=m].to_vec(),
            output: spec.alphas[m + 1],
            coeff,
            epsilon_sup: spec.epsilon.sup(),
            symbol_bmo: Some(weighted_bmo_norm(&spec.symbol, None)?),
            grid,
        })
    }

    pub fn kind(&self) -> HaarSumKind {
        self.kind
    }

    pub fn input_alphas(&self) -> &[HaarIndex] {
        &self.inputs
    }

    pub fn output_alpha(&self) -> HaarIndex {
        self.output
    }

    /// `c_I`, `[level][pos]` for levels `0..D`.
    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeff
    }

    pub fn epsilon_sup(&self) -> f64 {
        self.epsilon_sup
    }

    /// Dyadic BMO norm of the paraproduct symbol.
    pub fn symbol_bmo(&self) -> Option<f64> {
        self.symbol_bmo
    }

    fn check_inputs<T: Scalar>(&self, f: &[&GridFunction<T>]) -> Result<()> {
        if f.len() != self.inputs.len() {
            return Err(domain(format!(
                "operator of arity {} applied to {} inputs",
                self.inputs.len(),
                f.len()
            )));
        }
        for fj in f {
            if fj.grid() != &self.grid {
                return Err(domain("input lives on a different grid than the operator"));
            }
        }
        Ok(())
    }

    /// `d_I = c_I ∏_j ⟨f_j, h_I^{α_j}⟩`, `[level][pos]`, from one pyramid pass per input.
    pub fn term_coefficients<T: Scalar>(&self, f: &[&GridFunction<T>]) -> Result<Vec<Vec<T>>> {
        self.check_inputs(f)?;
        let d = self.grid.depth() as usize;
        let per_input: Vec<Vec<Vec<T>>> = f
            .par_iter()
            .zip(&self.inputs)
            .map(|(fj, a)| {
                let pyr = fj.average_pyramid();
                let mut c = coefficients_from_pyramid(&self.grid, &pyr, a);
                c.truncate(d);
                c
            })
            .collect();
        Ok((0..d)
            .map(|k| {
                (0..self.coeff[k].len())
                    .map(|p| {
                        let mut t = T::from_real(self.coeff[k][p]);
                        for c in &per_input {
                            t *= c[k][p];
                        }
                        t
                    })
                    .collect()
            })
            .collect())
    }

    /// Fast evaluation: O(N·m) through Haar pyramids.
    pub fn apply_fast<T: Scalar>(&self, f: &[&GridFunction<T>]) -> Result<GridFunction<T>> {
        let d = self.term_coefficients(f)?;
        haar_synthesis(&self.grid, &self.output, &d)
    }

    /// Reference evaluation: every coefficient by quadrature, every term
    /// materialized over the whole grid.
    pub fn apply_naive(&self, f: &[&GridFunction]) -> Result<GridFunction> {
        self.check_inputs(f)?;
        let mut out = vec![0.0; self.grid.leaf_count()];
        for k in 0..self.grid.depth() {
            for q in self.grid.level_cubes(k) {
                let c = self.coeff[k as usize][q.pos()];
                if c == 0.0 {
                    continue;
                }
                let mut t = c;
                for (fj, a) in f.iter().zip(&self.inputs) {
                    t *= haar_coefficient(fj, &q, a)?;
                }
                if t == 0.0 {
                    continue;
                }
                let h = haar_function(&self.grid, &q, &self.output)?;
                for (o, v) in out.iter_mut().zip(h.values()) {
                    *o += t * v;
                }
            }
        }
        GridFunction::from_storage(&self.grid, out)
    }

    /// `T^J f⃗ = Σ_{I ⊋ J} d_I h_I^{α_out}`.
    pub fn truncated_tail<T: Scalar>(&self, j: &Cube, f: &[&GridFunction<T>]) -> Result<GridFunction<T>> {
        self.grid.check(j)?;
        let d = self.term_coefficients(f)?;
        let masked: Vec<Vec<T>> = d
            .iter()
            .enumerate()
            .map(|(k, lvl)| {
                let mut v = vec![T::zero(); lvl.len()];
                if (k as u32) < j.level() {
                    let a = j.ancestor(k as u32);
                    v[a.pos()] = lvl[a.pos()];
                }
                v
            })
            .collect();
        haar_synthesis(&self.grid, &self.output, &masked)
    }

    /// `T_♯ f⃗(x) = max_J |T^J f⃗(x)|`, exactly, via partial sums along the
    /// ancestor chain of each leaf: for every `J`, `T^J f⃗(x)` is the sum of
    /// the chain terms of `x` down to some level.
    pub fn maximal_truncation<T: Scalar>(&self, f: &[&GridFunction<T>]) -> Result<GridFunction> {
        let d = self.term_coefficients(f)?;
        let signs = self.output.signs();
        let cancel = self.output.is_cancellative();
        let n = self.grid.dim();
        // partial sum through level k-1 and running max, per cube at level k
        let mut sums = vec![T::zero()];
        let mut best = vec![0.0f64];
        for k in 1..=self.grid.depth() as usize {
            let amp = self.grid.level_measure((k - 1) as u32).powf(-0.5);
            let mut ns = Vec::with_capacity(sums.len() << n);
            let mut nb = Vec::with_capacity(sums.len() << n);
            for (p, (&s, &b)) in sums.iter().zip(&best).enumerate() {
                let t = d[k - 1][p].scale(amp);
                for &sg in &signs {
                    let v = if cancel { s + t.scale(sg) } else { s + t };
                    ns.push(v);
                    nb.push(b.max(v.modulus()));
                }
            }
            sums = ns;
            best = nb;
        }
        GridFunction::from_storage(&self.grid, best)
    }

    /// `max_{J'' ∋ x, J'' ≠ root} |⟨T f⃗⟩_{J''}|`; equals [`Self::maximal_truncation`]
    /// when the output index is cancellative.
    pub fn maximal_truncation_by_averages<T: Scalar>(&self, f: &[&GridFunction<T>]) -> Result<GridFunction> {
        if !self.output.is_cancellative() {
            return Err(domain(
                "the averaged form of the maximal truncation needs a cancellative output index",
            ));
        }
        let tf = self.apply_fast(f)?;
        let pyr = tf.average_pyramid();
        let n = self.grid.children_per_cube();
        let mut best = vec![0.0f64];
        for lvl in &pyr[1..] {
            best = lvl
                .iter()
                .enumerate()
                .map(|(p, v)| best[p / n].max(v.modulus()))
                .collect();
        }
        GridFunction::from_storage(&self.grid, best)
    }
}

impl MultilinearOperator for HaarSum {
    fn arity(&self) -> usize {
        self.inputs.len()
    }

    fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    fn apply(&self, f: &[&GridFunction]) -> Result<GridFunction> {
        self.apply_fast(f)
    }

    fn apply_complex(&self, f: &[&crate::dyadic::ComplexFunction]) -> Result<crate::dyadic::ComplexFunction> {
        self.apply_fast(f)
    }

    fn as_haar_sum(&self) -> Option<&HaarSum> {
        Some(self)
    }
}

pub fn apply_haar_multiplier<T: ApplyScalar>(
    spec: &HaarMultiplierSpec,
    f: &[&GridFunction<T>],
) -> Result<GridFunction<T>> {
    HaarSum::multiplier(spec)?.apply_fast(f)
}

/// Evaluates the defining sum; admissibility of the indices is not required.
pub fn apply_paraproduct<T: ApplyScalar>(spec: &ParaproductSpec, f: &[&GridFunction<T>]) -> Result<GridFunction<T>> {
    HaarSum::paraproduct_sum(spec)?.apply_fast(f)
}
