use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{config, domain, Error, Result};

/// Upper bound on `dim * depth`; 2^26 leaves is far beyond desk scale already.
pub const MAX_LEAF_BITS: u32 = 26;

/// A finite dyadic partition of the unit torus `[0,1)^n`.
///
/// Cubes are addressed by `(level, index vector)`. Internally every cube is
/// stored by its Z-order (Morton) position so that the leaves of a cube form a
/// contiguous range of the storage order; this is what makes every pyramid
/// pass a sequence of contiguous slice reductions. The public leaf order used
/// by constructors and serialization is row-major.
///
/// The grid may be shifted by an integer number of leaf cells per coordinate.
/// Leaf `i` of a shifted grid covers the physical cell `i + shift` (mod `2^D`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicGrid {
    dim: usize,
    depth: u32,
    shift: Vec<u64>,
}

impl DyadicGrid {
    pub fn new(dim: usize, depth: u32) -> Result<Self> {
        Self::with_shift(dim, depth, vec![0; dim])
    }

    /// Shifted grid; `shift[i]` counts leaf cells along coordinate `i`.
    pub fn with_shift(dim: usize, depth: u32, shift: Vec<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(config("grid dimension must be positive"));
        }
        if depth == 0 {
            return Err(config("grid depth must be positive"));
        }
        if dim as u32 * depth > MAX_LEAF_BITS {
            return Err(config(format!(
                "grid with dim {dim} and depth {depth} exceeds 2^{MAX_LEAF_BITS} leaves"
            )));
        }
        if shift.len() != dim {
            return Err(config(format!(
                "shift has {} entries, expected {dim}",
                shift.len()
            )));
        }
        let side = 1u64 << depth;
        if let Some(s) = shift.iter().find(|&&s| s >= side) {
            return Err(config(format!("shift {s} not below 2^{depth}")));
        }
        Ok(Self { dim, depth, shift })
    }

    /// Shifted grid from real offsets in `[0,1)`, each a multiple of `2^-depth`.
    pub fn with_offsets(dim: usize, depth: u32, offsets: &[f64]) -> Result<Self> {
        let side = (1u64 << depth.min(63)) as f64;
        let cells = offsets
            .iter()
            .map(|&o| {
                let c = o * side;
                if !(0.0..1.0).contains(&o) || (c - c.round()).abs() > 1e-9 {
                    Err(config(format!(
                        "shift {o} is not a multiple of 2^-{depth} in [0,1)"
                    )))
                } else {
                    Ok(c.round() as u64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_shift(dim, depth, cells)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Shift in leaf cells.
    pub fn shift(&self) -> &[u64] {
        &self.shift
    }

    /// Shift as offsets in `[0,1)`.
    pub fn offsets(&self) -> Vec<f64> {
        let h = self.leaf_side();
        self.shift.iter().map(|&s| s as f64 * h).collect()
    }

    /// Side length of a leaf cell, `2^-D`.
    pub fn leaf_side(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn leaf_count(&self) -> usize {
        1usize << (self.dim as u32 * self.depth)
    }

    /// Lebesgue measure of a leaf cell.
    pub fn leaf_measure(&self) -> f64 {
        self.level_measure(self.depth)
    }

    pub fn level_measure(&self, level: u32) -> f64 {
        (-((self.dim as u32 * level) as f64)).exp2()
    }

    pub fn children_per_cube(&self) -> usize {
        1 << self.dim
    }

    /// Number of cubes at `level`.
    pub fn cubes_at(&self, level: u32) -> usize {
        1usize << (self.dim as u32 * level)
    }

    pub fn total_cubes(&self) -> usize {
        (0..=self.depth).map(|k| self.cubes_at(k)).sum()
    }

    pub fn root(&self) -> Cube {
        Cube {
            level: 0,
            pos: 0,
            dim: self.dim as u8,
        }
    }

    /// Cube at `level` with the given index vector.
    pub fn cube(&self, level: u32, index: &[u64]) -> Result<Cube> {
        if level > self.depth {
            return Err(domain(format!(
                "level {level} exceeds grid depth {}",
                self.depth
            )));
        }
        if index.len() != self.dim {
            return Err(domain(format!(
                "index has {} coordinates, grid dimension is {}",
                index.len(),
                self.dim
            )));
        }
        let side = 1u64 << level;
        if let Some(i) = index.iter().find(|&&i| i >= side) {
            return Err(domain(format!("index {i} outside level {level}")));
        }
        Ok(Cube {
            level,
            pos: interleave(index, level) as usize,
            dim: self.dim as u8,
        })
    }

    /// Cube at `level` from its storage (Z-order) position.
    pub fn cube_at(&self, level: u32, pos: usize) -> Cube {
        debug_assert!(level <= self.depth && pos < self.cubes_at(level));
        Cube {
            level,
            pos,
            dim: self.dim as u8,
        }
    }

    pub fn contains(&self, q: &Cube) -> bool {
        q.dim as usize == self.dim && q.level <= self.depth && q.pos < self.cubes_at(q.level)
    }

    pub fn check(&self, q: &Cube) -> Result<()> {
        if self.contains(q) {
            Ok(())
        } else {
            Err(domain(format!("cube {q} does not belong to the grid")))
        }
    }

    /// Storage range of the leaves of `q`.
    pub fn leaf_range(&self, q: &Cube) -> Range<usize> {
        let shift = self.dim as u32 * (self.depth - q.level);
        (q.pos << shift)..((q.pos + 1) << shift)
    }

    /// Ancestor at `level` of the leaf stored at `leaf`.
    pub fn leaf_ancestor(&self, leaf: usize, level: u32) -> Cube {
        self.cube_at(level, leaf >> (self.dim as u32 * (self.depth - level)))
    }

    /// All cubes at `level`, in storage order.
    pub fn level_cubes(&self, level: u32) -> impl Iterator<Item = Cube> + '_ {
        (0..self.cubes_at(level)).map(move |p| self.cube_at(level, p))
    }

    /// Every cube of the grid, coarse to fine.
    pub fn all_cubes(&self) -> impl Iterator<Item = Cube> + '_ {
        (0..=self.depth).flat_map(move |k| self.level_cubes(k))
    }

    /// Storage position of the leaf with row-major index `r`.
    pub fn storage_of_row_major(&self, r: usize) -> usize {
        let side_bits = self.depth;
        let mask = (1u64 << side_bits) - 1;
        let mut index = vec![0u64; self.dim];
        let mut rest = r as u64;
        for i in (0..self.dim).rev() {
            index[i] = rest & mask;
            rest >>= side_bits;
        }
        interleave(&index, self.depth) as usize
    }

    /// Row-major index of the leaf at storage position `s`.
    pub fn row_major_of_storage(&self, s: usize) -> usize {
        let index = deinterleave(s as u64, self.depth, self.dim);
        index
            .iter()
            .fold(0u64, |acc, &i| (acc << self.depth) | i) as usize
    }

    /// Permutation taking row-major leaf order to storage order:
    /// `perm[row_major] = storage`.
    pub fn row_major_permutation(&self) -> Vec<usize> {
        (0..self.leaf_count())
            .map(|r| self.storage_of_row_major(r))
            .collect()
    }

    /// Same partition, ignoring shift.
    pub fn same_shape(&self, other: &DyadicGrid) -> bool {
        self.dim == other.dim && self.depth == other.depth
    }

    /// Grid with the same shift but a different depth; the shift is rescaled
    /// and must stay a whole number of leaf cells.
    pub fn at_depth(&self, depth: u32) -> Result<DyadicGrid> {
        let shift = self
            .shift
            .iter()
            .map(|&s| {
                if depth >= self.depth {
                    Ok(s << (depth - self.depth))
                } else {
                    let d = self.depth - depth;
                    if s & ((1 << d) - 1) != 0 {
                        Err(Error::Resolution(format!(
                            "shift {s} not representable at depth {depth}"
                        )))
                    } else {
                        Ok(s >> d)
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        DyadicGrid::with_shift(self.dim, depth, shift)
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    dim: usize,
    depth: u32,
    #[serde(default)]
    shift: Option<Vec<f64>>,
}

impl Serialize for DyadicGrid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridRepr {
            dim: self.dim,
            depth: self.depth,
            shift: Some(self.offsets()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GridRepr::deserialize(d)?;
        let offsets = r.shift.unwrap_or_else(|| vec![0.0; r.dim]);
        DyadicGrid::with_offsets(r.dim, r.depth, &offsets).map_err(serde::de::Error::custom)
    }
}

/// Interleave the low `bits` bits of each coordinate, coordinate 0 most
/// significant within each bit plane.
fn interleave(index: &[u64], bits: u32) -> u64 {
    let n = index.len() as u32;
    let mut out = 0u64;
    for b in (0..bits).rev() {
        for &c in index {
            out = (out << 1) | ((c >> b) & 1);
        }
    }
    debug_assert!(n * bits <= 64);
    out
}

fn deinterleave(pos: u64, bits: u32, dim: usize) -> Vec<u64> {
    let mut index = vec![0u64; dim];
    let n = dim as u32;
    for b in 0..bits {
        for (i, c) in index.iter_mut().enumerate() {
            let bit = (pos >> (b * n + (n - 1 - i as u32))) & 1;
            *c |= bit << b;
        }
    }
    index
}

/// A dyadic cube of some grid, identified by level and Z-order position.
///
/// Ordering is by level, then position; this is the deterministic cube order
/// used by every collection in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    level: u32,
    pos: usize,
    dim: u8,
}

impl Cube {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Z-order position within the level.
    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn index(&self) -> Vec<u64> {
        deinterleave(self.pos as u64, self.level, self.dim as usize)
    }

    pub fn measure(&self) -> f64 {
        (-((self.dim as u32 * self.level) as f64)).exp2()
    }

    pub fn parent(&self) -> Option<Cube> {
        (self.level > 0).then(|| Cube {
            level: self.level - 1,
            pos: self.pos >> self.dim,
            dim: self.dim,
        })
    }

    /// Child number `c` in `0..2^n`; bit `n-1-i` of `c` selects the upper half
    /// along coordinate `i`.
    pub fn child(&self, c: usize) -> Cube {
        debug_assert!(c < 1 << self.dim);
        Cube {
            level: self.level + 1,
            pos: (self.pos << self.dim) + c,
            dim: self.dim,
        }
    }

    pub fn children(&self) -> impl Iterator<Item = Cube> + '_ {
        (0..1usize << self.dim).map(|c| self.child(c))
    }

    /// Which child of its parent this cube is.
    pub fn child_number(&self) -> usize {
        self.pos & ((1 << self.dim) - 1)
    }

    /// Ancestor at a coarser (or equal) level.
    pub fn ancestor(&self, level: u32) -> Cube {
        debug_assert!(level <= self.level);
        Cube {
            level,
            pos: self.pos >> (self.dim as u32 * (self.level - level)),
            dim: self.dim,
        }
    }

    /// `self ⊆ other`.
    pub fn is_within(&self, other: &Cube) -> bool {
        other.level <= self.level && self.ancestor(other.level) == *other
    }

    /// Strict ancestors, root first.
    pub fn strict_ancestors(&self) -> impl Iterator<Item = Cube> + '_ {
        (0..self.level).map(|k| self.ancestor(k))
    }

    /// Parses `"level:i,j"` (or `"level:i"` in 1D).
    pub fn parse(grid: &DyadicGrid, s: &str) -> Result<Cube> {
        let bad = || config(format!("malformed cube key {s:?}; expected \"level:i,j\""));
        let (level, rest) = s.split_once(':').ok_or_else(bad)?;
        let level: u32 = level.trim().parse().map_err(|_| bad())?;
        let index = rest
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        grid.cube(level, &index).map_err(|e| config(e.to_string()))
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.level)?;
        for (i, c) in self.index().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Haar index `α ∈ {0,1}^n`; coordinate `i` is cancellative when `α_i = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HaarIndex {
    dim: u8,
    bits: u8,
}

impl HaarIndex {
    pub fn new(alpha: &[u8]) -> Result<Self> {
        if alpha.is_empty() || alpha.len() > 8 {
            return Err(domain("Haar index must have between 1 and 8 entries"));
        }
        let mut bits = 0u8;
        for &a in alpha {
            if a > 1 {
                return Err(domain(format!("Haar index entry {a} is not a bit")));
            }
            bits = (bits << 1) | a;
        }
        Ok(Self {
            dim: alpha.len() as u8,
            bits,
        })
    }

    /// The non-cancellative index `1⃗`.
    pub fn ones(dim: usize) -> Self {
        Self {
            dim: dim as u8,
            bits: ((1u16 << dim) - 1) as u8,
        }
    }

    /// The fully cancellative index `0⃗`.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim: dim as u8,
            bits: 0,
        }
    }

    /// All `2^n - 1` cancellative indices.
    pub fn cancellative_all(dim: usize) -> impl Iterator<Item = HaarIndex> {
        let full = (1u16 << dim) - 1;
        (0..full).map(move |b| HaarIndex {
            dim: dim as u8,
            bits: b as u8,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn alpha(&self) -> Vec<u8> {
        (0..self.dim)
            .map(|i| (self.bits >> (self.dim - 1 - i)) & 1)
            .collect()
    }

    pub fn is_cancellative(&self) -> bool {
        self != &Self::ones(self.dim as usize)
    }

    /// Sign of `h^α` on child number `c` of its cube.
    #[inline]
    pub fn sign(&self, c: usize) -> f64 {
        let full = (1u16 << self.dim) - 1;
        let mask = (!self.bits as u16) & full;
        if ((c as u16) & mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Signs on all children, indexed by child number.
    pub fn signs(&self) -> Vec<f64> {
        (0..1usize << self.dim).map(|c| self.sign(c)).collect()
    }
}

impl fmt::Display for HaarIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.alpha() {
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl Serialize for HaarIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.alpha().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HaarIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<u8>::deserialize(d)?;
        HaarIndex::new(&v).map_err(serde::de::Error::custom)
    }
}
