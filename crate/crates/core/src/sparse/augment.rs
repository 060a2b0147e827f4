use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::collection::SparseCollection;
use crate::dyadic::{Cube, DyadicGrid, GridFunction};
use crate::error::{domain, Result};

/// Oscillation ratio that stops the local tree.
const STOP_RATIO: f64 = 2.0;

/// `S̃ ⊇ S` with its design and realized constants.
#[derive(Clone, Debug)]
pub struct Augmentation {
    pub collection: SparseCollection,
    /// `2^n · STOP_RATIO`, the constant guaranteed by the construction.
    pub design_constant: f64,
    /// Smallest `C` with `|b − ⟨b⟩_Q| ≤ C Σ_{J∈S̃, J⊆Q} ⟨|b − ⟨b⟩_J|⟩_J χ_J` on
    /// every `Q ∈ S`.
    pub realized_constant: f64,
    pub carleson_constant: f64,
    pub added: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AugmentationSummary {
    pub cubes: usize,
    pub added: usize,
    pub eta: f64,
    pub design_constant: f64,
    pub realized_constant: f64,
    pub carleson_constant: f64,
}

impl Augmentation {
    pub fn summary(&self) -> AugmentationSummary {
        AugmentationSummary {
            cubes: self.collection.len(),
            added: self.added,
            eta: self.collection.eta(),
            design_constant: self.design_constant,
            realized_constant: self.realized_constant,
            carleson_constant: self.carleson_constant,
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean oscillation `⟨|b − ⟨b⟩_Q|⟩_Q`.
fn oscillation(b: &[f64]) -> f64 {
    let m = mean(b);
    b.iter().map(|x| (x - m).abs()).sum::<f64>() / b.len() as f64
}

/// Children of node `r`: maximal cubes strictly inside `r` that belong to `s`
/// or where `⟨|b − ⟨b⟩_r|⟩_J` exceeds `STOP_RATIO · ω_r`.
fn node_children(grid: &DyadicGrid, b: &[f64], s: &BTreeSet<Cube>, r: &Cube, scale: f64) -> Vec<Cube> {
    let range = grid.leaf_range(r);
    let vals = &b[range.clone()];
    let lam = mean(vals);
    let omega = oscillation(vals);
    let cut = if omega > 1e-13 * scale { STOP_RATIO * omega } else { f64::INFINITY };
    let mut prefix = Vec::with_capacity(vals.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in vals {
        acc += (v - lam).abs();
        prefix.push(acc);
    }
    let mut out = Vec::new();
    if r.level() == grid.depth() {
        return out;
    }
    let mut stack: Vec<Cube> = r.children().collect();
    while let Some(j) = stack.pop() {
        let jr = grid.leaf_range(&j);
        let (a, z) = (jr.start - range.start, jr.end - range.start);
        let osc = (prefix[z] - prefix[a]) / (z - a) as f64;
        if s.contains(&j) || osc > cut {
            out.push(j);
        } else if j.level() < grid.depth() {
            // skip subtrees with nothing to find
            if cut.is_finite() || s.range(j..).next().is_some() {
                stack.extend(j.children());
            }
        }
    }
    out
}

/// Sparse collection over `cubes` with greedy bottom-up witnesses: each cube
/// claims `⌈η|Q|⌉` unclaimed leaves, `η` starting at the inverse Carleson
/// constant and shrinking until every cube succeeds.
pub fn witnesses_from_carleson(grid: &DyadicGrid, cubes: &BTreeSet<Cube>, provenance: &str) -> Result<SparseCollection> {
    let mut probe = SparseCollection::new(grid, 1.0, provenance)?;
    for q in cubes {
        probe.insert(*q, FixedBitSet::new())?;
    }
    let carleson = probe.carleson_constant().max(1.0);
    let mut order: Vec<Cube> = cubes.iter().copied().collect();
    order.sort_by(|a, b| b.level().cmp(&a.level()).then(a.pos().cmp(&b.pos())));
    let mut eta = 1.0 / carleson;
    for _ in 0..200 {
        if let Some(s) = try_claim(grid, &order, eta, provenance)? {
            return Ok(s);
        }
        eta *= 0.95;
    }
    Err(domain("could not assign disjoint witnesses"))
}

fn try_claim(grid: &DyadicGrid, order: &[Cube], eta: f64, provenance: &str) -> Result<Option<SparseCollection>> {
    let mut taken = FixedBitSet::with_capacity(grid.leaf_count());
    let mut s = SparseCollection::new(grid, eta, provenance)?;
    for q in order {
        let range = grid.leaf_range(q);
        let need = (eta * range.len() as f64 - 1e-9).ceil().max(1.0) as usize;
        let mut w = FixedBitSet::with_capacity(range.len());
        let mut got = 0;
        for (i, leaf) in range.clone().enumerate() {
            if got == need {
                break;
            }
            if !taken.contains(leaf) {
                taken.insert(leaf);
                w.insert(i);
                got += 1;
            }
        }
        if got < need {
            return Ok(None);
        }
        s.insert(*q, w)?;
    }
    Ok(Some(s))
}

/// Extends `s` to `S̃` so that `|b − ⟨b⟩_Q| χ_Q` is dominated by the local
/// oscillations over `S̃` for every `Q ∈ S`.
pub fn augment_for_symbol(s: &SparseCollection, b: &GridFunction) -> Result<Augmentation> {
    let grid = s.grid();
    if b.grid() != grid {
        return Err(domain("symbol lives on a different grid than the collection"));
    }
    let vals = b.values();
    let scale = b.max_abs().max(f64::MIN_POSITIVE);
    let base: BTreeSet<Cube> = s.cubes().copied().collect();
    let roots: Vec<Cube> = base
        .iter()
        .filter(|q| q.strict_ancestors().all(|a| !base.contains(&a)))
        .copied()
        .collect();
    let mut all = BTreeSet::new();
    let mut stack = roots;
    while let Some(r) = stack.pop() {
        stack.extend(node_children(grid, vals, &base, &r, scale));
        all.insert(r);
    }
    let added = all.len() - base.len();
    let collection = witnesses_from_carleson(grid, &all, &format!("{} + oscillation stopping", s.provenance()))?;
    let carleson_constant = collection.carleson_constant();

    // per leaf: (level, ω_J) for every J ∈ S̃ containing it
    let mut per_leaf: Vec<Vec<(u32, f64)>> = vec![Vec::new(); grid.leaf_count()];
    for j in &all {
        let range = grid.leaf_range(j);
        let omega = oscillation(&vals[range.clone()]);
        for x in range {
            per_leaf[x].push((j.level(), omega));
        }
    }
    let mut realized = 0.0f64;
    for q in &base {
        let range = grid.leaf_range(q);
        let lam = mean(&vals[range.clone()]);
        for x in range {
            let lhs = (vals[x] - lam).abs();
            if lhs <= 1e-12 * scale {
                continue;
            }
            let rhs: f64 = per_leaf[x].iter().filter(|(l, _)| *l >= q.level()).map(|(_, w)| w).sum();
            realized = realized.max(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY });
        }
    }
    Ok(Augmentation {
        collection,
        design_constant: (grid.children_per_cube() as f64) * STOP_RATIO,
        realized_constant: realized,
        carleson_constant,
        added,
    })
}
