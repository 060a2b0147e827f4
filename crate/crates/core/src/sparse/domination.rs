use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adapted::adapted_sparse_sum;
use super::collection::SparseCollection;
use super::stopping::cz_stopping_local;
use crate::dyadic::{Cube, DyadicGrid, GridFunction};
use crate::error::{domain, Error, Result};
use crate::operators::{wrap_commutators, HaarSum, MultilinearOperator};

/// `K(Q) = Σ_{I ⊋ Q} c_I ∏_j h_I^{α_j}(Q) h_I^{α_out}(Q)`, `[level][pos]` for
/// levels `0..=D`.
pub fn kernel_values(t: &HaarSum) -> Vec<Vec<f64>> {
    let grid = t.grid();
    let n = grid.dim();
    let nc = grid.children_per_cube();
    let m = t.arity() as i32;
    let in_signs: Vec<Vec<f64>> = t.input_alphas().iter().map(|a| a.signs()).collect();
    let out_signs = t.output_alpha().signs();
    let child_sign: Vec<f64> = (0..nc)
        .map(|c| in_signs.iter().map(|s| s[c]).product::<f64>() * out_signs[c])
        .collect();
    let mut k = vec![vec![0.0]];
    for level in 0..grid.depth() as usize {
        // |P|^{-(m+1)/2}
        let amp = ((n * level) as f64 * f64::from(m + 1) / 2.0).exp2();
        let coeff = &t.coefficients()[level];
        let next = k[level]
            .iter()
            .zip(coeff)
            .flat_map(|(kp, cp)| child_sign.iter().map(move |s| kp + cp * amp * s))
            .collect();
        k.push(next);
    }
    k
}

/// `K_T = max_L |L|^m |K(L)|` over leaves `L`.
pub fn kernel_bound(t: &HaarSum) -> f64 {
    let k = kernel_values(t);
    let grid = t.grid();
    let lm = grid.leaf_measure().powi(t.arity() as i32);
    k[grid.depth() as usize].iter().fold(0.0, |a, v| a.max(lm * v.abs()))
}

/// `M(x) = max_{x ∈ Q ⊆ q0} |T(g⃗χ_{q0})(x) − T(g⃗χ_Q)(x)|` for the leaves of
/// `q0`, from one top-down pass. `g` holds the inputs on the leaves of `q0`.
fn local_maximal(t: &HaarSum, kernel: &[Vec<f64>], q0: &Cube, g: &[Vec<f64>]) -> Vec<f64> {
    let grid = t.grid();
    let n = grid.dim();
    let nc = grid.children_per_cube();
    let depth = grid.depth() as usize;
    let k0 = q0.level() as usize;
    let levels = depth - k0;
    // local average pyramids, relative level r = 0..=levels
    let pyrs: Vec<Vec<Vec<f64>>> = g
        .iter()
        .map(|leaves| {
            let mut p = vec![leaves.clone()];
            for _ in 0..levels {
                let next = p
                    .last()
                    .unwrap()
                    .chunks_exact(nc)
                    .map(|c| c.iter().sum::<f64>() / nc as f64)
                    .collect();
                p.push(next);
            }
            p.reverse();
            p
        })
        .collect();
    let in_signs: Vec<Vec<f64>> = t.input_alphas().iter().map(|a| a.signs()).collect();
    let cancel: Vec<bool> = t.input_alphas().iter().map(|a| a.is_cancellative()).collect();
    let out_signs = t.output_alpha().signs();
    let measure = |r: usize| (-((n * (k0 + r)) as f64)).exp2();
    let integral = |r: usize, p: usize| pyrs.iter().map(|py| py[r][p] * measure(r)).product::<f64>();

    let mut s = vec![kernel[k0][q0.pos()] * integral(0, 0)];
    let mut mx = vec![0.0f64];
    for r in 0..levels {
        let root = measure(r).sqrt();
        let gbase = q0.pos() << (n * r);
        let mut s_next = vec![0.0; s.len() * nc];
        let mut m_next = vec![0.0; s.len() * nc];
        for p in 0..s.len() {
            let mut term = t.coefficients()[k0 + r][gbase + p];
            for (j, py) in pyrs.iter().enumerate() {
                let c = if cancel[j] {
                    (0..nc).map(|c| in_signs[j][c] * py[r + 1][p * nc + c]).sum::<f64>() / nc as f64
                } else {
                    py[r][p]
                };
                term *= c * root;
            }
            for c in 0..nc {
                let q = p * nc + c;
                let sq = s[p] + term / root * out_signs[c];
                let dq = sq - kernel[k0 + r + 1][(gbase + p) * nc + c] * integral(r + 1, q);
                s_next[q] = sq;
                m_next[q] = mx[p].max(dq.abs());
            }
        }
        s = s_next;
        mx = m_next;
    }
    mx
}

/// `max_{x ∈ Q ⊆ q0} |T(g⃗χ_{q0}) − T(g⃗χ_Q)|` on the whole grid, zero off `q0`.
pub fn grand_maximal_truncation(t: &HaarSum, g: &[&GridFunction], q0: &Cube) -> Result<GridFunction> {
    check_inputs(t, g)?;
    t.grid().check(q0)?;
    let range = t.grid().leaf_range(q0);
    let local: Vec<Vec<f64>> = g.iter().map(|f| f.values()[range.clone()].to_vec()).collect();
    let mx = local_maximal(t, &kernel_values(t), q0, &local);
    let mut out = GridFunction::zeros(t.grid());
    out.values_mut()[range].copy_from_slice(&mx);
    Ok(out)
}

fn check_inputs(t: &HaarSum, f: &[&GridFunction]) -> Result<()> {
    if f.len() != t.arity() {
        return Err(domain(format!("operator of arity {} given {} inputs", t.arity(), f.len())));
    }
    if f.iter().any(|g| g.grid() != t.grid()) {
        return Err(domain("input lives on a different grid than the operator"));
    }
    Ok(())
}

/// One stopping-time step, recorded for the certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub cube: String,
    /// `C_Q`; absent on leaf cubes.
    pub threshold: Option<f64>,
    /// `|E|` in leaves.
    pub exceptional: usize,
    pub stopping: usize,
}

/// A sparse collection with the constant it was built for and the pointwise
/// check of the bound on the construction inputs.
#[derive(Clone, Debug)]
pub struct DominationCertificate {
    pub collection: SparseCollection,
    /// `(K_T + 1) · max(1, max_Q C_Q)`.
    pub constant: f64,
    pub kernel_bound: f64,
    pub max_threshold: f64,
    /// `max_x |C(f⃗)(x)| / Σ_γ A^γ(x)`.
    pub realized_constant: f64,
    /// `min_x (constant · Σ_γ A^γ − |C(f⃗)|)(x)`.
    pub min_slack: f64,
    pub slack: GridFunction,
    pub nodes: Vec<NodeTrace>,
}

struct Ctx<'a> {
    t: &'a HaarSum,
    kernel: Vec<Vec<f64>>,
    symbols: &'a [GridFunction],
    commuted: &'a [usize],
    f: &'a [&'a GridFunction],
}

struct Entry {
    cube: Cube,
    witness: FixedBitSet,
    trace: NodeTrace,
}

impl Ctx<'_> {
    fn grid(&self) -> &DyadicGrid {
        self.t.grid()
    }

    fn node(&self, q0: Cube) -> Result<Vec<Entry>> {
        let grid = self.grid();
        let n = grid.dim();
        let range = grid.leaf_range(&q0);
        let len = range.len();
        let l = self.commuted.len();
        let full = || {
            let mut w = FixedBitSet::with_capacity(len);
            w.insert_range(..);
            w
        };
        if q0.level() == grid.depth() {
            // on a leaf every centred symbol vanishes, so only T itself is left
            let nonzero = self.f.iter().all(|g| g.values()[range.start] != 0.0);
            if l > 0 || !nonzero {
                return Ok(Vec::new());
            }
            return Ok(vec![Entry {
                cube: q0,
                witness: full(),
                trace: NodeTrace {
                    cube: q0.to_string(),
                    threshold: None,
                    exceptional: 0,
                    stopping: 0,
                },
            }]);
        }
        let centred: Vec<Vec<f64>> = self
            .symbols
            .iter()
            .map(|b| {
                let v = &b.values()[range.clone()];
                let lam = v.iter().sum::<f64>() / len as f64;
                v.iter().map(|x| x - lam).collect()
            })
            .collect();
        let mut ratio = vec![0.0f64; len];
        let mut active = false;
        for sigma in 0..(1usize << l) {
            let g: Vec<Vec<f64>> = self
                .f
                .iter()
                .enumerate()
                .map(|(j, fj)| {
                    let v = &fj.values()[range.clone()];
                    match self.commuted.iter().position(|&c| c == j) {
                        Some(k) if sigma >> k & 1 == 1 => v.iter().zip(&centred[k]).map(|(a, b)| a * b).collect(),
                        _ => v.to_vec(),
                    }
                })
                .collect();
            let prod: f64 = g
                .iter()
                .map(|v| v.iter().map(|x| x.abs()).sum::<f64>() / len as f64)
                .product();
            if prod == 0.0 {
                continue;
            }
            active = true;
            let mx = local_maximal(self.t, &self.kernel, &q0, &g);
            for (x, r) in ratio.iter_mut().enumerate() {
                let pointwise = g.iter().map(|v| v[x]).product::<f64>().abs();
                *r = r.max(pointwise.max(mx[x]) / prod);
            }
        }
        if !active {
            return Ok(Vec::new());
        }
        // smallest threshold leaving at most 2^{-(n+2)}|q0| exceptional leaves
        let budget = len >> (n + 2);
        let mut sorted = ratio.clone();
        sorted.sort_unstable_by(|a, b| b.total_cmp(a));
        let threshold = sorted[budget];
        let mut e = FixedBitSet::with_capacity(len);
        for (x, r) in ratio.iter().enumerate() {
            if *r > threshold {
                e.insert(x);
            }
        }
        let lambda = (-((n + 1) as f64)).exp2();
        let stopping = cz_stopping_local(grid, &e, &q0, lambda);
        let mut witness = full();
        let mut covered = 0;
        for p in &stopping {
            let r = grid.leaf_range(p);
            let (a, z) = (r.start - range.start, r.end - range.start);
            if (a..z).all(|x| e.contains(x)) {
                return Err(Error::Construction(format!("stopping cube {p} lies inside the exceptional set")));
            }
            witness.set_range(a..z, false);
            covered += z - a;
        }
        if 2 * covered >= len {
            return Err(Error::Construction(format!(
                "stopping cubes of {q0} cover {covered} of {len} leaves"
            )));
        }
        let mut out = vec![Entry {
            cube: q0,
            witness,
            trace: NodeTrace {
                cube: q0.to_string(),
                threshold: Some(threshold),
                exceptional: e.count_ones(..),
                stopping: stopping.len(),
            },
        }];
        let below: Vec<Vec<Entry>> = stopping
            .par_iter()
            .map(|p| self.node(*p))
            .collect::<Result<_>>()?;
        out.extend(below.into_iter().flatten());
        Ok(out)
    }
}

fn check_setup(t: &HaarSum, symbols: &[GridFunction], commuted: &[usize], f: &[&GridFunction]) -> Result<()> {
    check_inputs(t, f)?;
    if symbols.len() != commuted.len() {
        return Err(domain("one symbol per commuted slot is required"));
    }
    if commuted.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("commuted slots must be strictly increasing"));
    }
    if let Some(j) = commuted.iter().find(|&&j| j >= t.arity()) {
        return Err(domain(format!("commuted slot {j} out of range for arity {}", t.arity())));
    }
    if symbols.iter().any(|b| b.grid() != t.grid()) {
        return Err(domain("symbol lives on a different grid than the operator"));
    }
    Ok(())
}

/// `|[b⃗, T]_I(f⃗)|`.
pub fn commutator_modulus(
    t: &HaarSum,
    symbols: &[GridFunction],
    commuted: &[usize],
    f: &[&GridFunction],
) -> Result<GridFunction> {
    check_setup(t, symbols, commuted, f)?;
    let mut per_slot = vec![Vec::new(); t.arity()];
    for (b, &j) in symbols.iter().zip(commuted) {
        per_slot[j].push(b.clone());
    }
    let op = wrap_commutators(Arc::new(t.clone()), &per_slot)?;
    Ok(op.apply(f)?.abs())
}

/// Pointwise check of `|[b⃗, T]_I(f⃗)| ≤ C Σ_γ A^γ_{S,b⃗}(f⃗)`:
/// returns the slack function, its minimum, and the realized ratio.
pub fn domination_slack(
    t: &HaarSum,
    symbols: &[GridFunction],
    commuted: &[usize],
    f: &[&GridFunction],
    s: &SparseCollection,
    constant: f64,
) -> Result<(GridFunction, f64, f64)> {
    let lhs = commutator_modulus(t, symbols, commuted, f)?;
    let rhs = adapted_sparse_sum(s, symbols, commuted, f)?;
    let scale = lhs.max_abs().max(1e-300);
    let mut realized = 0.0f64;
    for (a, b) in lhs.values().iter().zip(rhs.values()) {
        if *a > 1e-12 * scale {
            realized = realized.max(if *b > 0.0 { a / b } else { f64::INFINITY });
        }
    }
    let slack = rhs.zip_map(&lhs, |r, l| constant * r - l)?;
    let min = slack.values().iter().copied().fold(f64::INFINITY, f64::min);
    Ok((slack, min, realized))
}

/// Builds a sparse collection dominating `[b⃗, T]_I(f⃗)` pointwise by the
/// adapted sparse forms, and checks the bound on the inputs.
///
/// `symbols` is aligned with `commuted` (0-based, strictly increasing).
pub fn sparse_dominate_commutator(
    t: &HaarSum,
    symbols: &[GridFunction],
    commuted: &[usize],
    f: &[&GridFunction],
) -> Result<DominationCertificate> {
    check_setup(t, symbols, commuted, f)?;
    let ctx = Ctx {
        t,
        kernel: kernel_values(t),
        symbols,
        commuted,
        f,
    };
    let entries = ctx.node(t.grid().root())?;
    let kernel_bound = kernel_bound(t);
    let mut collection = SparseCollection::new(t.grid(), 0.5, "local grand maximal truncation stopping")?;
    let mut max_threshold = 0.0f64;
    let mut nodes = Vec::with_capacity(entries.len());
    for e in entries {
        if let Some(c) = e.trace.threshold {
            max_threshold = max_threshold.max(c);
        }
        collection.insert(e.cube, e.witness)?;
        nodes.push(e.trace);
    }
    let constant = (kernel_bound + 1.0) * max_threshold.max(1.0);
    let (slack, min_slack, realized_constant) = domination_slack(t, symbols, commuted, f, &collection, constant)?;
    Ok(DominationCertificate {
        collection,
        constant,
        kernel_bound,
        max_threshold,
        realized_constant,
        min_slack,
        slack,
        nodes,
    })
}
