use std::collections::BTreeMap;
use std::fmt;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::dyadic::{Cube, DyadicGrid};
use crate::error::{config, domain, Result};

/// Cubes with explicit witness sets `E_Q ⊆ Q`, stored as bitsets over the
/// leaves of `Q` in storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCollection {
    grid: DyadicGrid,
    eta: f64,
    entries: BTreeMap<Cube, FixedBitSet>,
    provenance: String,
}

/// The first broken sparsity condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SparsityViolation {
    WitnessTooSmall { cube: String, measure: f64, required: f64 },
    OutsideCube { cube: String },
    Overlap { first: String, second: String },
}

impl fmt::Display for SparsityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparsityViolation::WitnessTooSmall { cube, measure, required } => {
                write!(f, "witness of cube {cube} has measure {measure}, needs {required}")
            }
            SparsityViolation::OutsideCube { cube } => {
                write!(f, "witness of cube {cube} is not contained in the cube")
            }
            SparsityViolation::Overlap { first, second } => {
                write!(f, "witnesses of cubes {first} and {second} overlap")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub passed: bool,
    pub violation: Option<SparsityViolation>,
}

impl SparseCollection {
    pub fn new(grid: &DyadicGrid, eta: f64, provenance: impl Into<String>) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(domain(format!("sparsity parameter {eta} outside (0, 1]")));
        }
        Ok(Self {
            grid: grid.clone(),
            eta,
            entries: BTreeMap::new(),
            provenance: provenance.into(),
        })
    }

    /// Adds `q` with witness given as a bitset over the leaves of `q`
    /// (replacing any previous witness).
    pub fn insert(&mut self, q: Cube, witness: FixedBitSet) -> Result<()> {
        self.grid.check(&q)?;
        self.entries.insert(q, witness);
        Ok(())
    }

    /// Adds `q` with `E_Q = Q`.
    pub fn insert_full(&mut self, q: Cube) -> Result<()> {
        let n = self.grid.leaf_range(&q).len();
        let mut w = FixedBitSet::with_capacity(n);
        w.insert_range(..);
        self.insert(q, w)
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn set_eta(&mut self, eta: f64) {
        self.eta = eta;
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, q: &Cube) -> bool {
        self.entries.contains_key(q)
    }

    /// Cubes in deterministic (level, position) order.
    pub fn cubes(&self) -> impl Iterator<Item = &Cube> {
        self.entries.keys()
    }

    pub fn witness(&self, q: &Cube) -> Option<&FixedBitSet> {
        self.entries.get(q)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Cube, &FixedBitSet)> {
        self.entries.iter()
    }

    /// Checks `|E_Q| ≥ η|Q|`, `E_Q ⊆ Q` and pairwise disjointness exactly.
    pub fn verify(&self) -> SparsityReport {
        let fail = |v| SparsityReport {
            passed: false,
            violation: Some(v),
        };
        let mut owner: Vec<Option<Cube>> = vec![None; self.grid.leaf_count()];
        for (q, w) in &self.entries {
            let range = self.grid.leaf_range(q);
            if w.len() > range.len() && w.ones().any(|i| i >= range.len()) {
                return fail(SparsityViolation::OutsideCube { cube: q.to_string() });
            }
            let count = w.count_ones(..);
            let required = self.eta * range.len() as f64;
            // integer counts against η|Q| in leaf units; tolerate rounding of η
            if (count as f64) < required * (1.0 - 1e-12) {
                return fail(SparsityViolation::WitnessTooSmall {
                    cube: q.to_string(),
                    measure: count as f64 * self.grid.leaf_measure(),
                    required: required * self.grid.leaf_measure(),
                });
            }
            for i in w.ones() {
                let leaf = range.start + i;
                if let Some(prev) = owner[leaf] {
                    return fail(SparsityViolation::Overlap {
                        first: prev.to_string(),
                        second: q.to_string(),
                    });
                }
                owner[leaf] = Some(*q);
            }
        }
        SparsityReport {
            passed: true,
            violation: None,
        }
    }

    /// Largest `Σ_{J ∈ S, J ⊆ Q} |J| / |Q|` over `Q ∈ S`.
    pub fn carleson_constant(&self) -> f64 {
        let mut best = 0.0f64;
        // per leaf, how many collection cubes contain it: Σ_{J⊆Q}|J| = Σ_{x∈Q} #{J∈S: x∈J⊆Q}
        let d = self.grid.depth() as usize;
        let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); d + 1];
        for q in self.entries.keys() {
            by_level[q.level() as usize].push(q.pos());
        }
        // mass[k][pos] = Σ_{J∈S, J⊆cube(k,pos)} |J| in leaf units, bottom-up
        let n = self.grid.children_per_cube();
        let mut mass = vec![0usize; self.grid.leaf_count()];
        for &p in &by_level[d] {
            mass[p] += 1;
        }
        for k in (0..d).rev() {
            let mut next: Vec<usize> = mass.chunks_exact(n).map(|c| c.iter().sum()).collect();
            let size = 1usize << (self.grid.dim() * (d - k));
            for &p in &by_level[k] {
                next[p] += size;
                best = best.max(next[p] as f64 / size as f64);
            }
            mass = next;
        }
        if !by_level[d].is_empty() {
            best = best.max(1.0);
        }
        best
    }
}

/// `verify_sparsity` as a free function.
pub fn verify_sparsity(s: &SparseCollection) -> SparsityReport {
    s.verify()
}

/// Serialized collection: cubes as `"level:i,j"` and one base64 bitset per
/// cube, bits in row-major order of the cube's leaves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectionRepr {
    pub eta: f64,
    pub cubes: Vec<String>,
    pub witness_bitsets: Vec<String>,
}

/// Storage-order → row-major permutation of the leaves of a cube `levels` deep.
fn local_row_major(dim: usize, levels: u32) -> Result<Option<Vec<usize>>> {
    if dim == 1 || levels == 0 {
        return Ok(None);
    }
    let sub = DyadicGrid::new(dim, levels)?;
    Ok(Some(
        (0..sub.leaf_count()).map(|s| sub.row_major_of_storage(s)).collect(),
    ))
}

impl SparseCollection {
    pub fn to_repr(&self) -> CollectionRepr {
        let mut cubes = Vec::with_capacity(self.entries.len());
        let mut bits = Vec::with_capacity(self.entries.len());
        for (q, w) in &self.entries {
            let levels = self.grid.depth() - q.level();
            let n = self.grid.leaf_range(q).len();
            let perm = local_row_major(self.grid.dim(), levels).expect("valid sub-grid");
            let mut bytes = vec![0u8; n.div_ceil(8)];
            for i in w.ones() {
                let r = perm.as_ref().map_or(i, |p| p[i]);
                bytes[r / 8] |= 1 << (r % 8);
            }
            cubes.push(q.to_string());
            bits.push(STANDARD.encode(bytes));
        }
        CollectionRepr {
            eta: self.eta,
            cubes,
            witness_bitsets: bits,
        }
    }

    /// Rebuilds a collection; only decoding is checked here, sparsity is left
    /// to [`SparseCollection::verify`].
    pub fn from_repr(grid: &DyadicGrid, repr: &CollectionRepr, provenance: &str) -> Result<Self> {
        if repr.cubes.len() != repr.witness_bitsets.len() {
            return Err(config("cubes and witness_bitsets differ in length"));
        }
        let mut s = SparseCollection::new(grid, repr.eta, provenance)?;
        for (key, enc) in repr.cubes.iter().zip(&repr.witness_bitsets) {
            let q = Cube::parse(grid, key)?;
            if s.contains(&q) {
                return Err(config(format!("cube {key} listed twice")));
            }
            let bytes = STANDARD
                .decode(enc)
                .map_err(|e| config(format!("witness of {key}: {e}")))?;
            let n = grid.leaf_range(&q).len();
            let levels = grid.depth() - q.level();
            let perm = local_row_major(grid.dim(), levels)?;
            let mut inv = vec![0usize; n];
            if let Some(p) = &perm {
                for (s_idx, &r) in p.iter().enumerate() {
                    inv[r] = s_idx;
                }
            }
            // bits past the cube end are kept so verification can report them
            let last = bytes.iter().rposition(|b| *b != 0).map_or(0, |i| i * 8 + 8 - bytes[i].leading_zeros() as usize);
            let mut w = FixedBitSet::with_capacity(n.max(last));
            for (b, byte) in bytes.iter().enumerate() {
                for k in 0..8 {
                    if byte >> k & 1 == 1 {
                        let r = b * 8 + k;
                        let idx = if r < n && perm.is_some() { inv[r] } else { r };
                        w.insert(idx);
                    }
                }
            }
            s.insert(q, w)?;
        }
        Ok(s)
    }
}
