//! Two-weight (Bloom) setups and the constant of the Bloom bound.

use serde::{Deserialize, Serialize};

use super::characteristic::{ap_characteristic, multilinear_ap_characteristic, weight_product};
use super::exponents::{ExponentVector, WeightVector};
use crate::dyadic::GridFunction;
use crate::error::{domain, Result};

/// Exponents, commuted slots `I` (0-based), and the weight vectors `μ⃗`, `λ⃗`.
///
/// Outside `I` the two weight vectors coincide; inside, the Bloom weight of
/// slot `j` is `ν_j = (μ_j / λ_j)^{1/p_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BloomSetup {
    exponents: ExponentVector,
    commuted: Vec<usize>,
    mu: WeightVector,
    lambda: WeightVector,
}

/// Every characteristic entering the Bloom constant.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BloomCharacteristics {
    /// `[μ_j]_{A_{p_j}}` for every slot.
    pub mu: Vec<f64>,
    /// `[λ_j]_{A_{p_j}}` for every slot.
    pub lambda: Vec<f64>,
    /// `[w⃗]_{A_{q⃗}}` of the reduced vector, 1 when every slot is commuted.
    pub reduced: f64,
    /// `[μ⃗]_{A_{p⃗}}`.
    pub mu_multilinear: f64,
    /// `[λ⃗]_{A_{p⃗}}`.
    pub lambda_multilinear: f64,
}

impl BloomSetup {
    pub fn new(
        exponents: ExponentVector,
        commuted: Vec<usize>,
        mu: Vec<GridFunction>,
        lambda: Vec<GridFunction>,
    ) -> Result<Self> {
        let m = exponents.len();
        let mut sorted = commuted.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != commuted.len() {
            return Err(domain("commuted slots contain duplicates"));
        }
        if let Some(&j) = sorted.iter().find(|&&j| j >= m) {
            return Err(domain(format!("commuted slot {j} out of range for arity {m}")));
        }
        let mu = WeightVector::new(mu, exponents.clone())?;
        let lambda = WeightVector::new(lambda, exponents.clone())?;
        mu.weight(0).ensure_same_grid(lambda.weight(0))?;
        for j in (0..m).filter(|j| !sorted.contains(j)) {
            let (a, b) = (mu.weight(j), lambda.weight(j));
            if a.max_diff(b) > 1e-12 * a.max_abs().max(1.0) {
                return Err(domain(format!(
                    "slot {j} is not commuted, so mu and lambda must agree there"
                )));
            }
        }
        Ok(Self {
            exponents,
            commuted: sorted,
            mu,
            lambda,
        })
    }

    /// Unweighted setup on `grid`.
    pub fn unweighted(grid: &crate::DyadicGrid, exponents: ExponentVector, commuted: Vec<usize>) -> Result<Self> {
        let one = vec![GridFunction::constant(grid, 1.0); exponents.len()];
        Self::new(exponents, commuted, one.clone(), one)
    }

    pub fn exponents(&self) -> &ExponentVector {
        &self.exponents
    }

    pub fn arity(&self) -> usize {
        self.exponents.len()
    }

    pub fn commuted(&self) -> &[usize] {
        &self.commuted
    }

    pub fn is_commuted(&self, j: usize) -> bool {
        self.commuted.contains(&j)
    }

    pub fn mu(&self) -> &WeightVector {
        &self.mu
    }

    pub fn lambda(&self) -> &WeightVector {
        &self.lambda
    }

    /// Slots outside `I`.
    pub fn reduced_slots(&self) -> Vec<usize> {
        (0..self.arity()).filter(|j| !self.is_commuted(*j)).collect()
    }

    /// `ν_j = (μ_j / λ_j)^{1/p_j}` for a commuted slot `j`.
    pub fn bloom_weight(&self, j: usize) -> GridFunction {
        let p = self.exponents.get(j);
        self.mu
            .weight(j)
            .zip_map(self.lambda.weight(j), |a, b| (a / b).powf(1.0 / p))
            .expect("same grid")
    }

    /// `ν_{λ⃗}`, the target weight of the Bloom bound.
    pub fn target_weight(&self) -> GridFunction {
        weight_product(&self.lambda)
    }

    /// The reduced exponents and weights `(q⃗, w⃗)`, absent when `I` is everything.
    pub fn reduced(&self) -> Option<WeightVector> {
        let slots = self.reduced_slots();
        (!slots.is_empty()).then(|| self.mu.select(&slots).expect("valid sub-vector"))
    }

    /// `q` with `1/q = Σ_{j∉I} 1/p_j`; `p` when every slot is commuted.
    pub fn q(&self) -> f64 {
        match self.reduced() {
            Some(w) => w.exponents().p(),
            None => self.exponents.p(),
        }
    }

    pub fn characteristics(&self) -> BloomCharacteristics {
        let m = self.arity();
        let ap = |w: &WeightVector, j: usize| {
            ap_characteristic(w.weight(j), self.exponents.get(j)).expect("valid weight")
        };
        BloomCharacteristics {
            mu: (0..m).map(|j| ap(&self.mu, j)).collect(),
            lambda: (0..m).map(|j| ap(&self.lambda, j)).collect(),
            reduced: self.reduced().map_or(1.0, |w| multilinear_ap_characteristic(&w)),
            mu_multilinear: multilinear_ap_characteristic(&self.mu),
            lambda_multilinear: multilinear_ap_characteristic(&self.lambda),
        }
    }

    /// `C(μ⃗, λ⃗, p⃗)`.
    pub fn theorem_constant(&self) -> f64 {
        theorem_constant_from(self, &self.characteristics())
    }
}

/// `C(μ⃗, λ⃗, p⃗)` from precomputed characteristics.
pub fn theorem_constant_from(setup: &BloomSetup, ch: &BloomCharacteristics) -> f64 {
    let e = setup.exponents();
    let q = setup.q();
    let max_dual = e.duals().into_iter().fold(f64::NEG_INFINITY, f64::max);
    let mut log_c = 0.0;
    for &s in setup.commuted() {
        let ps = e.get(s);
        log_c += (1.0f64).max(1.0 / (ps - 1.0)) * ch.mu[s].ln();
        log_c += ps.max(q).max(max_dual) / ps * ch.lambda[s].ln();
    }
    if setup.reduced().is_some() {
        log_c += q.max(max_dual) / q * ch.reduced.ln();
    }
    log_c.exp()
}

/// Both sides of `[w⃗₁]_{A_{r⃗}} ≤ (∏_s [λ_s]_{A_{p_s}}^{r/p_s}) [w⃗]_{A_{q⃗}}^{r/q}`,
/// where `w⃗₁` joins `λ_s` on `block ⊆ I` with the reduced vector `w⃗`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderChain {
    pub lhs: f64,
    pub rhs: f64,
    /// `log rhs - log lhs`; nonnegative when the chain holds.
    pub log_slack: f64,
}

pub fn holder_chain(setup: &BloomSetup, block: &[usize]) -> Result<HolderChain> {
    if let Some(j) = block.iter().find(|j| !setup.is_commuted(**j)) {
        return Err(domain(format!("block slot {j} is not commuted")));
    }
    let reduced = setup.reduced_slots();
    let mut slots: Vec<usize> = block.to_vec();
    slots.extend(&reduced);
    if slots.is_empty() {
        return Err(domain("empty block and reduced vector"));
    }
    let weights = slots
        .iter()
        .map(|&j| {
            if setup.is_commuted(j) {
                setup.lambda().weight(j).clone()
            } else {
                setup.mu().weight(j).clone()
            }
        })
        .collect();
    let w1 = WeightVector::new(weights, setup.exponents().select(&slots)?)?;
    let r = w1.exponents().p();
    let lhs = multilinear_ap_characteristic(&w1);
    let mut log_rhs = 0.0;
    for &s in block {
        let ps = setup.exponents().get(s);
        log_rhs += r / ps * ap_characteristic(setup.lambda().weight(s), ps)?.ln();
    }
    if let Some(w) = setup.reduced() {
        log_rhs += r / w.exponents().p() * multilinear_ap_characteristic(&w).ln();
    }
    Ok(HolderChain {
        lhs,
        rhs: log_rhs.exp(),
        log_slack: log_rhs - lhs.ln(),
    })
}
