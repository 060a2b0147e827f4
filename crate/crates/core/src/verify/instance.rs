use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{
    EpsilonFill, ExperimentConfig, GridSpec, InputGen, OperatorSpec, SymbolGen, WeightGen, SCHEMA_VERSION,
};
use super::random::{calibrated_weight, random_bmo_symbol, random_input, random_martingale};
use crate::dyadic::{DyadicGrid, GridFunction, HaarIndex};
use crate::error::{config, Error, Result};
use crate::operators::{
    wrap_commutators, Epsilon, HaarMultiplierSpec, HaarSum, MultilinearOperator, Operator, ParaproductSpec,
};
use crate::sparse::{domination_slack, verify_sparsity, CollectionRepr, DominationCertificate, SparseCollection, SparsityReport};
use crate::weights::{BloomSetup, ExponentVector};

/// RNG of trial `trial` at `depth`: stream `(depth << 32) | trial` of `seed`.
pub fn trial_rng(seed: u64, depth: u32, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((depth as u64) << 32) | trial as u64);
    rng
}

/// Operator with every coefficient spelled out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConcreteOperator {
    HaarMultiplier {
        alphas: Vec<Vec<u8>>,
        /// Nonzero `ε_I` keyed by `"level:i,j"`.
        epsilon: BTreeMap<String, f64>,
    },
    Paraproduct {
        alphas: Vec<Vec<u8>>,
        epsilon: BTreeMap<String, f64>,
        symbol: GridFunction,
    },
}

impl ConcreteOperator {
    pub fn build(&self, grid: &DyadicGrid) -> Result<HaarSum> {
        let parse = |alphas: &[Vec<u8>], eps: &BTreeMap<String, f64>| -> Result<(Vec<HaarIndex>, Epsilon)> {
            let a = alphas
                .iter()
                .map(|a| HaarIndex::new(a))
                .collect::<Result<Vec<_>>>()?;
            Ok((a, Epsilon::constant(grid, 0.0).with_overrides(eps)?))
        };
        match self {
            ConcreteOperator::HaarMultiplier { alphas, epsilon } => {
                let (alphas, epsilon) = parse(alphas, epsilon)?;
                HaarSum::multiplier(&HaarMultiplierSpec { epsilon, alphas })
            }
            ConcreteOperator::Paraproduct { alphas, epsilon, symbol } => {
                let (alphas, epsilon) = parse(alphas, epsilon)?;
                HaarSum::paraproduct(&ParaproductSpec {
                    symbol: symbol.regrid(grid)?,
                    epsilon,
                    alphas,
                })
            }
        }
    }
}

/// A fully concrete experiment instance, as written by `gen-instance` and
/// embedded in certificates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub schema_version: u32,
    pub grid: GridSpec,
    pub operator: ConcreteOperator,
    /// Commuted slots, 0-based.
    pub commuted: Vec<usize>,
    /// Symbols per slot, `k_j` of them in slot `j`.
    pub symbols: Vec<Vec<GridFunction>>,
    pub mu: Vec<GridFunction>,
    pub lambda: Vec<GridFunction>,
    pub inputs: Vec<GridFunction>,
}

/// Everything one trial works with.
#[derive(Clone, Debug)]
pub struct TrialInstance {
    pub grid: DyadicGrid,
    pub base: HaarSum,
    pub operator: ConcreteOperator,
    pub exponents: ExponentVector,
    pub commuted: Vec<usize>,
    pub symbols: Vec<Vec<GridFunction>>,
    pub mu: Vec<GridFunction>,
    pub lambda: Vec<GridFunction>,
    pub inputs: Vec<GridFunction>,
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) | Error::Io(_) => e,
        other => config(other.to_string()),
    }
}

fn sign_or_fill(spec: &super::config::EpsilonSpec, grid: &DyadicGrid, rng: &mut ChaCha8Rng) -> Result<Epsilon> {
    let e = match spec.fill {
        EpsilonFill::RandomSigns => Epsilon::random_signs(grid, rng),
        EpsilonFill::Ones => Epsilon::constant(grid, 1.0),
        EpsilonFill::Constant => Epsilon::constant(grid, spec.value),
    };
    e.with_overrides(&spec.values)
}

fn alphas_of(spec: &OperatorSpec) -> Vec<Vec<u8>> {
    spec.alphas().to_vec()
}

impl TrialInstance {
    /// Draws trial `trial` of `config` on its grid at `depth`.
    pub fn generate(cfg: &ExperimentConfig, depth: u32, trial: usize) -> Result<Self> {
        Self::generate_inner(cfg, depth, trial).map_err(as_config)
    }

    fn generate_inner(cfg: &ExperimentConfig, depth: u32, trial: usize) -> Result<Self> {
        let grid = cfg.grid.at_depth(depth)?;
        let base_dir = cfg.base_dir.as_deref();
        let mut rng = trial_rng(cfg.seed, depth, trial);
        let m = cfg.arity();
        let exponents = cfg.exponent_vector()?;
        let commuted = cfg.commuted_slots();
        let orders = cfg.slot_orders();

        let op_spec = match &cfg.operator {
            OperatorSpec::Commutator { base, .. } => base.as_ref(),
            other => other,
        };
        let epsilon = sign_or_fill(op_spec.epsilon(), &grid, &mut rng)?;
        let alphas = op_spec.haar_indices(grid.dim())?;
        let (base, operator) = match op_spec {
            OperatorSpec::Paraproduct { symbol, .. } => {
                let g = match symbol {
                    SymbolGen::Zero => GridFunction::zeros(&grid),
                    SymbolGen::Constant { value } => GridFunction::constant(&grid, *value),
                    SymbolGen::Random { norm, density } => random_bmo_symbol(&grid, &mut rng, *norm, *density, None)?,
                    SymbolGen::Functions { functions } => functions
                        .first()
                        .ok_or_else(|| config("paraproduct symbol list is empty"))?
                        .load_on(&grid, base_dir)?,
                };
                let spec = ParaproductSpec {
                    symbol: g.clone(),
                    epsilon: epsilon.clone(),
                    alphas,
                };
                (
                    HaarSum::paraproduct(&spec)?,
                    ConcreteOperator::Paraproduct {
                        alphas: alphas_of(op_spec),
                        epsilon: epsilon.to_map(),
                        symbol: g,
                    },
                )
            }
            _ => (
                HaarSum::multiplier(&HaarMultiplierSpec {
                    epsilon: epsilon.clone(),
                    alphas,
                })?,
                ConcreteOperator::HaarMultiplier {
                    alphas: alphas_of(op_spec),
                    epsilon: epsilon.to_map(),
                },
            ),
        };

        let (mu, lambda) = match &cfg.weights {
            WeightGen::Unit => {
                let one = vec![GridFunction::constant(&grid, 1.0); m];
                (one.clone(), one)
            }
            WeightGen::Random { strength, max_characteristic } => {
                let mut mu = Vec::with_capacity(m);
                let mut lambda = Vec::with_capacity(m);
                for j in 0..m {
                    let p = [exponents.get(j)];
                    let (w, _) = calibrated_weight(&grid, &mut rng, *strength, &p, *max_characteristic)?;
                    let l = if commuted.contains(&j) {
                        calibrated_weight(&grid, &mut rng, *strength, &p, *max_characteristic)?.0
                    } else {
                        w.clone()
                    };
                    mu.push(w);
                    lambda.push(l);
                }
                (mu, lambda)
            }
            WeightGen::Functions { mu, lambda } => {
                if mu.len() != m || lambda.len() != m {
                    return Err(config(format!("weights need {m} mu and {m} lambda functions")));
                }
                let load = |v: &[super::config::FunctionRef]| {
                    v.iter().map(|f| f.load_on(&grid, base_dir)).collect::<Result<Vec<_>>>()
                };
                (load(mu)?, load(lambda)?)
            }
        };
        let setup = BloomSetup::new(exponents.clone(), commuted.clone(), mu.clone(), lambda.clone())?;

        let symbols: Vec<Vec<GridFunction>> = match &cfg.operator {
            OperatorSpec::Commutator { symbols, .. } => symbols
                .iter()
                .map(|s| s.iter().map(|f| f.load_on(&grid, base_dir)).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?,
            _ => {
                let total: usize = orders.iter().sum();
                let mut listed = match &cfg.symbols {
                    SymbolGen::Functions { functions } => {
                        if functions.len() != total {
                            return Err(config(format!(
                                "{} symbol functions for total commutator order {total}",
                                functions.len()
                            )));
                        }
                        functions.iter()
                    }
                    _ => [].iter(),
                };
                let mut out = Vec::with_capacity(m);
                for (j, &k) in orders.iter().enumerate() {
                    let nu = (k > 0).then(|| setup.bloom_weight(j));
                    let mut slot = Vec::with_capacity(k);
                    for _ in 0..k {
                        slot.push(match &cfg.symbols {
                            SymbolGen::Zero => GridFunction::zeros(&grid),
                            SymbolGen::Constant { value } => GridFunction::constant(&grid, *value),
                            SymbolGen::Random { norm, density } => {
                                random_bmo_symbol(&grid, &mut rng, *norm, *density, nu.as_ref())?
                            }
                            SymbolGen::Functions { .. } => {
                                listed.next().expect("count checked").load_on(&grid, base_dir)?
                            }
                        });
                    }
                    out.push(slot);
                }
                out
            }
        };

        let inputs = match &cfg.inputs {
            InputGen::Uniform => (0..m).map(|_| random_input(&grid, &mut rng)).collect(),
            InputGen::Martingale => (0..m).map(|_| random_martingale(&grid, &mut rng)).collect(),
            InputGen::Functions { functions } => {
                if functions.len() != m {
                    return Err(config(format!("{} input functions for arity {m}", functions.len())));
                }
                functions.iter().map(|f| f.load_on(&grid, base_dir)).collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Self {
            grid,
            base,
            operator,
            exponents,
            commuted,
            symbols,
            mu,
            lambda,
            inputs,
        })
    }

    pub fn input_refs(&self) -> Vec<&GridFunction> {
        self.inputs.iter().collect()
    }

    /// First symbol of every commuted slot, aligned with `commuted`.
    pub fn commuted_symbols(&self) -> Vec<GridFunction> {
        self.commuted.iter().map(|&j| self.symbols[j][0].clone()).collect()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.symbols.iter().map(Vec::len).collect()
    }

    pub fn setup(&self) -> Result<BloomSetup> {
        BloomSetup::new(self.exponents.clone(), self.commuted.clone(), self.mu.clone(), self.lambda.clone())
    }

    /// The iterated commutator with all symbols.
    pub fn commutator(&self) -> Result<Operator> {
        wrap_commutators(Arc::new(self.base.clone()), &self.symbols)
    }

    pub fn to_instance(&self) -> Instance {
        Instance {
            schema_version: SCHEMA_VERSION,
            grid: GridSpec::from(&self.grid),
            operator: self.operator.clone(),
            commuted: self.commuted.clone(),
            symbols: self.symbols.clone(),
            mu: self.mu.clone(),
            lambda: self.lambda.clone(),
            inputs: self.inputs.clone(),
        }
    }
}

/// Trial 0 of `config` at its grid depth.
pub fn gen_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    Ok(TrialInstance::generate(cfg, cfg.grid.depth, 0)?.to_instance())
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        let i: Instance = serde_json::from_str(text).map_err(|e| config(e.to_string()))?;
        if i.schema_version != SCHEMA_VERSION {
            return Err(config(format!("unsupported schema version {}", i.schema_version)));
        }
        Ok(i)
    }

    /// The base operator and the symbols/inputs moved onto the instance grid.
    fn parts(&self) -> Result<(HaarSum, Vec<GridFunction>, Vec<GridFunction>)> {
        let grid = self.grid.build()?;
        let base = self.operator.build(&grid).map_err(as_config)?;
        let m = base.arity();
        if self.inputs.len() != m || self.symbols.len() != m {
            return Err(config(format!("instance needs {m} inputs and symbol slots")));
        }
        let mut symbols = Vec::with_capacity(self.commuted.len());
        for &j in &self.commuted {
            let s = self
                .symbols
                .get(j)
                .and_then(|v| v.first())
                .ok_or_else(|| config(format!("commuted slot {j} has no symbol")))?;
            symbols.push(s.regrid(&grid).map_err(as_config)?);
        }
        let inputs = self
            .inputs
            .iter()
            .map(|f| f.regrid(&grid).map_err(as_config))
            .collect::<Result<Vec<_>>>()?;
        Ok((base, symbols, inputs))
    }
}

/// Serialized domination certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub grid: GridSpec,
    #[serde(flatten)]
    pub collection: CollectionRepr,
    pub constant: f64,
    pub min_slack: f64,
    pub realized_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<Instance>,
}

impl Certificate {
    pub fn new(cert: &DominationCertificate, instance: Option<Instance>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            grid: GridSpec::from(cert.collection.grid()),
            collection: cert.collection.to_repr(),
            constant: cert.constant,
            min_slack: cert.min_slack,
            realized_constant: cert.realized_constant,
            instance,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Certificate = serde_json::from_str(text).map_err(|e| config(e.to_string()))?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(config(format!("unsupported schema version {}", c.schema_version)));
        }
        Ok(c)
    }
}

/// Outcome of [`verify_certificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub passed: bool,
    pub sparsity: SparsityReport,
    /// Recomputed from the embedded instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Re-verifies a certificate without rerunning the construction: sparsity of
/// the stored collection and, when an instance is embedded, the pointwise
/// bound with the stored constant (slack ≥ `-tolerance`).
pub fn verify_certificate(cert: &Certificate, tolerance: f64) -> Result<CertificateCheck> {
    let grid = cert.grid.build()?;
    let collection = SparseCollection::from_repr(&grid, &cert.collection, "certificate")?;
    let sparsity = verify_sparsity(&collection);
    let mut out = CertificateCheck {
        passed: sparsity.passed,
        failure: sparsity.violation.as_ref().map(|v| format!("sparsity: {v}")),
        sparsity,
        min_slack: None,
        realized_constant: None,
    };
    if let Some(inst) = &cert.instance {
        let (base, symbols, inputs) = inst.parts()?;
        let refs: Vec<&GridFunction> = inputs.iter().collect();
        let (_, min, realized) =
            domination_slack(&base, &symbols, &inst.commuted, &refs, &collection, cert.constant).map_err(as_config)?;
        out.min_slack = Some(min);
        out.realized_constant = Some(realized);
        if min < -tolerance {
            out.passed = false;
            out.failure.get_or_insert_with(|| format!("pointwise bound fails: min slack {min:.3e}"));
        }
    }
    Ok(out)
}

/// Seed of an auxiliary stream of a trial, separated from the instance stream by `salt`.
pub fn aux_seed(seed: u64, depth: u32, trial: usize, salt: u64) -> u64 {
    use rand::RngCore;
    trial_rng(seed ^ salt, depth, trial).next_u64()
}
