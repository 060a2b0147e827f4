use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicGrid, GridFunction, HaarIndex, MAX_LEAF_BITS};
use crate::error::{config, Result};
use crate::weights::ExponentVector;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub depth: u32,
    #[serde(default)]
    pub shift: Vec<f64>,
}

impl GridSpec {
    pub fn build(&self) -> Result<DyadicGrid> {
        self.at_depth(self.depth)
    }

    pub fn at_depth(&self, depth: u32) -> Result<DyadicGrid> {
        let offsets = if self.shift.is_empty() {
            vec![0.0; self.dim]
        } else {
            self.shift.clone()
        };
        DyadicGrid::with_offsets(self.dim, depth, &offsets).map_err(|e| config(e.to_string()))
    }
}

impl From<&DyadicGrid> for GridSpec {
    fn from(g: &DyadicGrid) -> Self {
        GridSpec {
            dim: g.dim(),
            depth: g.depth(),
            shift: g.offsets(),
        }
    }
}

/// A function given by file path or inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionRef {
    Path { path: PathBuf },
    Inline(GridFunction),
}

impl FunctionRef {
    /// Loads the function; relative paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<GridFunction> {
        match self {
            FunctionRef::Inline(f) => Ok(f.clone()),
            FunctionRef::Path { path } => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let text = fs::read_to_string(&full)?;
                serde_json::from_str(&text)
                    .map_err(|e| config(format!("function file {}: {e}", full.display())))
            }
        }
    }

    /// Loads and moves the function onto `grid` (same dimension and depth required).
    pub fn load_on(&self, grid: &DyadicGrid, base: Option<&Path>) -> Result<GridFunction> {
        let f = self.load(base)?;
        if !f.grid().same_shape(grid) {
            return Err(config(format!(
                "function on a dim-{} depth-{} grid, expected dim {} depth {}",
                f.grid().dim(),
                f.grid().depth(),
                grid.dim(),
                grid.depth()
            )));
        }
        if f.grid() == grid {
            Ok(f)
        } else {
            f.regrid(grid)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonFill {
    #[default]
    RandomSigns,
    Ones,
    Constant,
}

/// `ε_I`: a fill rule plus explicit `"level:i,j" → value` overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSpec {
    #[serde(default)]
    pub fill: EpsilonFill,
    #[serde(default = "one")]
    pub value: f64,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
}

fn one() -> f64 {
    1.0
}

/// Operator description; Haar indices are given as 0/1 vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    HaarMultiplier {
        alphas: Vec<Vec<u8>>,
        #[serde(default)]
        epsilon: EpsilonSpec,
    },
    Paraproduct {
        alphas: Vec<Vec<u8>>,
        #[serde(default)]
        epsilon: EpsilonSpec,
        #[serde(default)]
        symbol: SymbolGen,
    },
    /// A fixed commutator of a base operator; its symbols replace generated ones.
    Commutator {
        base: Box<OperatorSpec>,
        orders: Vec<usize>,
        symbols: Vec<Vec<FunctionRef>>,
    },
}

impl OperatorSpec {
    pub fn arity(&self) -> usize {
        match self {
            OperatorSpec::HaarMultiplier { alphas, .. } => alphas.len().saturating_sub(1),
            OperatorSpec::Paraproduct { alphas, .. } => alphas.len().saturating_sub(2),
            OperatorSpec::Commutator { base, .. } => base.arity(),
        }
    }

    pub fn alphas(&self) -> &[Vec<u8>] {
        match self {
            OperatorSpec::HaarMultiplier { alphas, .. } | OperatorSpec::Paraproduct { alphas, .. } => alphas,
            OperatorSpec::Commutator { base, .. } => base.alphas(),
        }
    }

    pub fn haar_indices(&self, dim: usize) -> Result<Vec<HaarIndex>> {
        self.alphas()
            .iter()
            .map(|a| {
                if a.len() != dim {
                    return Err(config(format!("Haar index {a:?} does not have {dim} entries")));
                }
                HaarIndex::new(a).map_err(|e| config(e.to_string()))
            })
            .collect()
    }

    pub fn is_multiplier(&self) -> bool {
        match self {
            OperatorSpec::HaarMultiplier { .. } => true,
            OperatorSpec::Paraproduct { .. } => false,
            OperatorSpec::Commutator { base, .. } => base.is_multiplier(),
        }
    }

    pub fn epsilon(&self) -> &EpsilonSpec {
        match self {
            OperatorSpec::HaarMultiplier { epsilon, .. } | OperatorSpec::Paraproduct { epsilon, .. } => epsilon,
            OperatorSpec::Commutator { base, .. } => base.epsilon(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolGen {
    Zero,
    Constant {
        value: f64,
    },
    /// Random Haar martingale rescaled to BMO norm `norm` (weighted by the
    /// Bloom weight where the check has one).
    Random {
        #[serde(default = "one")]
        norm: f64,
        #[serde(default = "half")]
        density: f64,
    },
    Functions {
        functions: Vec<FunctionRef>,
    },
}

fn half() -> f64 {
    0.5
}

impl Default for SymbolGen {
    fn default() -> Self {
        SymbolGen::Random {
            norm: 1.0,
            density: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightGen {
    Unit,
    /// `exp(s·β)` with the largest `s ≤ strength` keeping every
    /// characteristic at most `max_characteristic`.
    Random {
        #[serde(default = "default_strength")]
        strength: f64,
        #[serde(default = "default_max_char")]
        max_characteristic: f64,
    },
    Functions {
        mu: Vec<FunctionRef>,
        lambda: Vec<FunctionRef>,
    },
}

fn default_strength() -> f64 {
    0.5
}

fn default_max_char() -> f64 {
    4.0
}

impl Default for WeightGen {
    fn default() -> Self {
        WeightGen::Unit
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputGen {
    /// Independent uniform values in `[-1, 1]`.
    #[default]
    Uniform,
    /// Random ±1 Haar martingales, the same law as the weight exponents.
    Martingale,
    Functions {
        functions: Vec<FunctionRef>,
    },
}

/// Per-check knobs with defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckOptions {
    /// Random inputs per operator-norm estimate.
    pub norm_trials: usize,
    /// Ratio whose first crossing defines the empirical `ε` of the conjugation sweep.
    pub conjugation_limit: f64,
    /// Sweep `t = 2^{-k}`, `k = 0..=sweep_steps`.
    pub sweep_steps: u32,
    /// Ratio bound at the smallest `t`.
    pub conjugation_tolerance: f64,
    /// BMO norm of the John–Nirenberg corpus.
    pub small_norm: f64,
    /// Bound on the exponential average of that corpus.
    pub exp_average_bound: f64,
    /// `ε₀` in the radius `δ_j = ε₀ / (p_j ‖b_j‖_BMO)` of the Cauchy circle sweep.
    pub cauchy_radius: f64,
    /// Relative error allowed for the extrapolated finite difference.
    pub cauchy_tolerance: f64,
    /// Allowed distance of the observed convergence order from 2.
    pub order_tolerance: f64,
    /// Allowed max/min ratio of the tracked quantity across depths.
    pub depth_factor: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            norm_trials: 16,
            conjugation_limit: 2.0,
            sweep_steps: 10,
            conjugation_tolerance: 1.01,
            small_norm: 0.1,
            exp_average_bound: 2.0,
            cauchy_radius: 0.5,
            cauchy_tolerance: 1e-6,
            order_tolerance: 0.2,
            depth_factor: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub arity: Option<usize>,
    #[serde(default)]
    pub exponents: Option<Vec<f64>>,
    /// Commuted slots, 0-based.
    #[serde(default)]
    pub commuted: Vec<usize>,
    /// Commutator order per slot (Cauchy check); defaults to 1 on commuted slots.
    #[serde(default)]
    pub orders: Option<Vec<usize>>,
    #[serde(default)]
    pub weights: WeightGen,
    #[serde(default)]
    pub symbols: SymbolGen,
    #[serde(default)]
    pub inputs: InputGen,
    pub operator: OperatorSpec,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Depth sweep; empty means the grid depth only.
    #[serde(default)]
    pub depths: Vec<u32>,
    #[serde(default)]
    pub options: CheckOptions,
    /// Directory against which relative function paths resolve.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    1e-10
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut c = Self::from_json(&text)?;
        c.base_dir = path.parent().map(Path::to_path_buf);
        Ok(c)
    }

    pub fn arity(&self) -> usize {
        self.arity.unwrap_or_else(|| self.operator.arity())
    }

    pub fn exponent_vector(&self) -> Result<ExponentVector> {
        let p = self.exponents.clone().unwrap_or_else(|| vec![2.0; self.arity()]);
        ExponentVector::new(p).map_err(|e| config(e.to_string()))
    }

    /// Per-slot orders: explicit, or 1 on commuted slots.
    pub fn slot_orders(&self) -> Vec<usize> {
        match (&self.orders, &self.operator) {
            (Some(o), _) => o.clone(),
            (None, OperatorSpec::Commutator { orders, .. }) => orders.clone(),
            (None, _) => (0..self.arity()).map(|j| usize::from(self.commuted.contains(&j))).collect(),
        }
    }

    /// Commuted slots, from the orders when a fixed commutator is given.
    pub fn commuted_slots(&self) -> Vec<usize> {
        let o = self.slot_orders();
        (0..self.arity()).filter(|&j| o[j] > 0).collect()
    }

    pub fn depth_list(&self) -> Vec<u32> {
        if self.depths.is_empty() {
            vec![self.grid.depth]
        } else {
            self.depths.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(config("trials must be at least 1"));
        }
        if !(1..=2).contains(&self.grid.dim) {
            return Err(config(format!("dimension {} not supported (1 or 2)", self.grid.dim)));
        }
        for d in self.depth_list() {
            if d == 0 || d as usize * self.grid.dim > MAX_LEAF_BITS as usize {
                return Err(config(format!("depth {d} outside the supported range")));
            }
        }
        self.grid.build()?;
        let m = self.arity();
        if m == 0 || m != self.operator.arity() {
            return Err(config(format!(
                "arity {m} does not match the operator's {} Haar indices",
                self.operator.alphas().len()
            )));
        }
        self.operator.haar_indices(self.grid.dim)?;
        let e = self.exponent_vector()?;
        if e.len() != m {
            return Err(config(format!("{} exponents for arity {m}", e.len())));
        }
        let orders = self.slot_orders();
        if orders.len() != m {
            return Err(config(format!("{} orders for arity {m}", orders.len())));
        }
        if orders.iter().sum::<usize>() > 3 {
            return Err(config("total commutator order above 3 is not supported"));
        }
        let mut seen = self.commuted.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.commuted.len() || seen.iter().any(|&j| j >= m) {
            return Err(config(format!("commuted slots {:?} invalid for arity {m}", self.commuted)));
        }
        if let OperatorSpec::Commutator { base, orders, symbols } = &self.operator {
            if matches!(**base, OperatorSpec::Commutator { .. }) {
                return Err(config("nested commutator specs are not supported"));
            }
            if orders.len() != m || symbols.len() != m || orders.iter().zip(symbols).any(|(k, s)| *k != s.len()) {
                return Err(config("commutator orders and symbols must match per slot"));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(config("tolerance must be nonnegative"));
        }
        if let SymbolGen::Random { norm, density } = self.symbols {
            if !(norm >= 0.0) || !(0.0..=1.0).contains(&density) {
                return Err(config("symbol norm must be ≥ 0 and density in [0, 1]"));
            }
        }
        if let WeightGen::Random { strength, max_characteristic } = self.weights {
            if !(strength >= 0.0) || !(max_characteristic >= 1.0) {
                return Err(config("weight strength must be ≥ 0 and max_characteristic ≥ 1"));
            }
        }
        Ok(())
    }

    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(mut self, seed: Option<u64>, depth: Option<u32>, trials: Option<usize>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(d) = depth {
            self.grid.depth = d;
            self.depths.clear();
        }
        if let Some(t) = trials {
            self.trials = t;
        }
        self.validate()?;
        Ok(self)
    }
}
