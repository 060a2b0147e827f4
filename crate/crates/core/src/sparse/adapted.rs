use crate::dyadic::{Cube, GridFunction};
use crate::error::{domain, Result};

use super::collection::SparseCollection;

/// Which factor a commuted slot contributes on a cube.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// `|b − ⟨b⟩_Q| ⟨|f|⟩_Q`
    Pointwise,
    /// `⟨|(b − ⟨b⟩_Q) f|⟩_Q`
    Averaged,
    Both,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `Γ(b, f, Q, γ)` on the whole grid, zero off `Q`.
pub fn gamma_term(b: &GridFunction, f: &GridFunction, q: &Cube, gamma: u8) -> Result<GridFunction> {
    b.ensure_same_grid(f)?;
    b.grid().check(q)?;
    let mode = match gamma {
        1 => Mode::Pointwise,
        2 => Mode::Averaged,
        _ => return Err(domain(format!("gamma must be 1 or 2, got {gamma}"))),
    };
    let mut out = GridFunction::zeros(b.grid());
    let range = b.grid().leaf_range(q);
    let factor = slot_factor(&b.values()[range.clone()], &f.values()[range.clone()], mode);
    out.values_mut()[range].copy_from_slice(&factor);
    Ok(out)
}

fn slot_factor(b: &[f64], f: &[f64], mode: Mode) -> Vec<f64> {
    let lam = mean(b);
    let af = f.iter().map(|v| v.abs()).sum::<f64>() / f.len() as f64;
    let abf = b.iter().zip(f).map(|(x, y)| ((x - lam) * y).abs()).sum::<f64>() / f.len() as f64;
    b.iter()
        .map(|x| match mode {
            Mode::Pointwise => (x - lam).abs() * af,
            Mode::Averaged => abf,
            Mode::Both => (x - lam).abs() * af + abf,
        })
        .collect()
}

fn check_args(s: &SparseCollection, symbols: &[GridFunction], commuted: &[usize], f: &[&GridFunction]) -> Result<()> {
    if symbols.len() != commuted.len() {
        return Err(domain("one symbol per commuted slot is required"));
    }
    if let Some(j) = commuted.iter().find(|&&j| j >= f.len()) {
        return Err(domain(format!("commuted slot {j} out of range for {} inputs", f.len())));
    }
    for g in symbols.iter().chain(f.iter().copied()) {
        if g.grid() != s.grid() {
            return Err(domain("function lives on a different grid than the collection"));
        }
    }
    Ok(())
}

fn accumulate(
    s: &SparseCollection,
    symbols: &[GridFunction],
    commuted: &[usize],
    modes: &[Mode],
    f: &[&GridFunction],
) -> GridFunction {
    let grid = s.grid();
    let mut out = vec![0.0; grid.leaf_count()];
    for q in s.cubes() {
        let range = grid.leaf_range(q);
        let mut term = vec![1.0; range.len()];
        for (j, fj) in f.iter().enumerate() {
            let vals = &fj.values()[range.clone()];
            match commuted.iter().position(|&c| c == j) {
                Some(k) => {
                    let factor = slot_factor(&symbols[k].values()[range.clone()], vals, modes[k]);
                    term.iter_mut().zip(factor).for_each(|(t, v)| *t *= v);
                }
                None => {
                    let a = vals.iter().map(|v| v.abs()).sum::<f64>() / vals.len() as f64;
                    term.iter_mut().for_each(|t| *t *= a);
                }
            }
        }
        out[range].iter_mut().zip(term).for_each(|(o, t)| *o += t);
    }
    GridFunction::from_storage(grid, out).expect("leaf-sized")
}

/// `A^γ_{S,b}(f⃗) = Σ_{Q∈S} ∏_{s∈I} Γ(b_s, f_s, Q, γ_s) ∏_{j∉I} ⟨|f_j|⟩_Q χ_Q`.
///
/// `symbols` and `gammas` are aligned with `commuted`.
pub fn adapted_sparse_apply(
    s: &SparseCollection,
    symbols: &[GridFunction],
    commuted: &[usize],
    gammas: &[u8],
    f: &[&GridFunction],
) -> Result<GridFunction> {
    check_args(s, symbols, commuted, f)?;
    if gammas.len() != commuted.len() {
        return Err(domain("one gamma per commuted slot is required"));
    }
    let modes = gammas
        .iter()
        .map(|g| match g {
            1 => Ok(Mode::Pointwise),
            2 => Ok(Mode::Averaged),
            _ => Err(domain(format!("gamma must be 1 or 2, got {g}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(accumulate(s, symbols, commuted, &modes, f))
}

/// `Σ_{γ ∈ {1,2}^I} A^γ_{S,b}(f⃗)`, evaluated by factoring the sum per slot.
pub fn adapted_sparse_sum(
    s: &SparseCollection,
    symbols: &[GridFunction],
    commuted: &[usize],
    f: &[&GridFunction],
) -> Result<GridFunction> {
    check_args(s, symbols, commuted, f)?;
    Ok(accumulate(s, symbols, commuted, &vec![Mode::Both; commuted.len()], f))
}
