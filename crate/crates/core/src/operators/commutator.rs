use std::sync::Arc;

use super::haar_sum::{HaarMultiplierSpec, HaarSum, ParaproductSpec};
use super::{ApplyScalar, MultilinearOperator, Operator};
use crate::dyadic::{ComplexFunction, DyadicGrid, GridFunction};
use crate::error::{domain, Result};

/// `[b, T]_β (f⃗) = b·T(f⃗) - T(f_1, …, b f_β, …, f_m)` with `β` 0-based.
pub struct Commutator {
    inner: Operator,
    symbol: GridFunction,
    slot: usize,
}

impl Commutator {
    pub fn symbol(&self) -> &GridFunction {
        &self.symbol
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    fn eval<T: ApplyScalar>(&self, f: &[&GridFunction<T>]) -> Result<GridFunction<T>> {
        if f.len() != self.inner.arity() {
            return Err(domain(format!(
                "commutator of arity {} applied to {} inputs",
                self.inner.arity(),
                f.len()
            )));
        }
        let b = self.symbol.map(T::from_real);
        let tf = T::apply_with(self.inner.as_ref(), f)?;
        let bf = f[self.slot].zip_map(&b, |x, y| x * y)?;
        let mut args = f.to_vec();
        args[self.slot] = &bf;
        let t_bf = T::apply_with(self.inner.as_ref(), &args)?;
        Ok(&(&b * &tf) - &t_bf)
    }
}

impl MultilinearOperator for Commutator {
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn grid(&self) -> &DyadicGrid {
        self.inner.grid()
    }

    fn apply(&self, f: &[&GridFunction]) -> Result<GridFunction> {
        self.eval(f)
    }

    fn apply_complex(&self, f: &[&ComplexFunction]) -> Result<ComplexFunction> {
        self.eval(f)
    }
}

/// `[b, T]_β` as a lazily evaluated operator; `beta` is 0-based.
pub fn commutator_single(t: Operator, b: &GridFunction, beta: usize) -> Result<Operator> {
    if beta >= t.arity() {
        return Err(domain(format!(
            "slot {beta} out of range for an operator of arity {}",
            t.arity()
        )));
    }
    if b.grid() != t.grid() {
        return Err(domain("commutator symbol lives on a different grid"));
    }
    Ok(Arc::new(Commutator {
        inner: t,
        symbol: b.clone(),
        slot: beta,
    }))
}

/// Base operator of a commutator.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseSpec {
    HaarMultiplier(HaarMultiplierSpec),
    Paraproduct(ParaproductSpec),
}

impl BaseSpec {
    pub fn build(&self) -> Result<HaarSum> {
        match self {
            BaseSpec::HaarMultiplier(s) => HaarSum::multiplier(s),
            BaseSpec::Paraproduct(s) => HaarSum::paraproduct(s),
        }
    }
}

/// Iterated commutator with orders `k⃗` and symbols `b_j^1, …, b_j^{k_j}` per slot.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorSpec {
    pub base: BaseSpec,
    pub orders: Vec<usize>,
    pub symbols: Vec<Vec<GridFunction>>,
}

impl CommutatorSpec {
    pub fn validate(&self, arity: usize) -> Result<()> {
        if self.orders.len() != arity || self.symbols.len() != arity {
            return Err(domain(format!(
                "commutator orders/symbols must have one entry per slot ({arity})"
            )));
        }
        for (j, (k, s)) in self.orders.iter().zip(&self.symbols).enumerate() {
            if *k != s.len() {
                return Err(domain(format!(
                    "slot {j} has order {k} but {} symbols",
                    s.len()
                )));
            }
        }
        Ok(())
    }

    pub fn total_order(&self) -> usize {
        self.orders.iter().sum()
    }
}

/// Nests single commutators slot by slot, slot 0 innermost, `k_j` layers per slot.
pub fn build_iterated_commutator(spec: &CommutatorSpec) -> Result<Operator> {
    let base: Operator = Arc::new(spec.base.build()?);
    wrap_commutators(base, &spec.symbols)
}

/// Wraps `t` in commutator layers, `symbols[j]` applied in slot `j`.
pub fn wrap_commutators(t: Operator, symbols: &[Vec<GridFunction>]) -> Result<Operator> {
    if symbols.len() != t.arity() {
        return Err(domain(format!(
            "{} symbol slots for an operator of arity {}",
            symbols.len(),
            t.arity()
        )));
    }
    let mut op = t;
    for (j, slot) in symbols.iter().enumerate() {
        for b in slot {
            op = commutator_single(op, b, j)?;
        }
    }
    Ok(op)
}
