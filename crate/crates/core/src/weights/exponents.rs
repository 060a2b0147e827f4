use serde::{Deserialize, Serialize};

use crate::dyadic::GridFunction;
use crate::error::{domain, Result};

/// Exponents `(p_1, …, p_m)` with `1 < p_j < ∞` and `1/p = Σ 1/p_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ExponentVector {
    p_list: Vec<f64>,
}

impl ExponentVector {
    pub fn new(p_list: Vec<f64>) -> Result<Self> {
        if p_list.is_empty() {
            return Err(domain("exponent vector is empty"));
        }
        if let Some(p) = p_list.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
            return Err(domain(format!("exponent {p} outside (1, ∞)")));
        }
        Ok(Self { p_list })
    }

    pub fn len(&self) -> usize {
        self.p_list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_list.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.p_list[j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p_list
    }

    /// `p'_j = p_j / (p_j - 1)`.
    pub fn dual(&self, j: usize) -> f64 {
        conjugate_exponent(self.p_list[j])
    }

    pub fn duals(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.dual(j)).collect()
    }

    /// The target exponent `p` with `1/p = Σ 1/p_j`.
    pub fn p(&self) -> f64 {
        1.0 / self.p_list.iter().map(|p| 1.0 / p).sum::<f64>()
    }

    /// Sub-vector on the given slots.
    pub fn select(&self, slots: &[usize]) -> Result<Self> {
        Self::new(slots.iter().map(|&j| self.p_list[j]).collect())
    }
}

impl TryFrom<Vec<f64>> for ExponentVector {
    type Error = crate::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ExponentVector> for Vec<f64> {
    fn from(e: ExponentVector) -> Self {
        e.p_list
    }
}

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `m` strictly positive weights paired with an exponent vector.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    weights: Vec<GridFunction>,
    exponents: ExponentVector,
}

impl WeightVector {
    pub fn new(weights: Vec<GridFunction>, exponents: ExponentVector) -> Result<Self> {
        if weights.len() != exponents.len() {
            return Err(domain(format!(
                "{} weights for {} exponents",
                weights.len(),
                exponents.len()
            )));
        }
        for w in &weights {
            weights[0].ensure_same_grid(w)?;
            check_positive(w)?;
        }
        Ok(Self { weights, exponents })
    }

    pub fn weights(&self) -> &[GridFunction] {
        &self.weights
    }

    pub fn weight(&self, j: usize) -> &GridFunction {
        &self.weights[j]
    }

    pub fn exponents(&self) -> &ExponentVector {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn select(&self, slots: &[usize]) -> Result<Self> {
        Self::new(
            slots.iter().map(|&j| self.weights[j].clone()).collect(),
            self.exponents.select(slots)?,
        )
    }
}

pub(crate) fn check_positive(w: &GridFunction) -> Result<()> {
    match w.values().iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        Some(v) => Err(domain(format!("weight value {v} is not strictly positive"))),
        None => Ok(()),
    }
}
