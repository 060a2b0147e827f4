use num_complex::Complex64;

use super::{ApplyScalar, MultilinearOperator};
use crate::dyadic::{ComplexFunction, GridFunction};
use crate::error::{domain, Result};

/// `T(f_1, …, h·f_β, …, f_m)`: the operator composed with multiplication by
/// `h` in slot `beta`.
pub fn multiply_slot<T: ApplyScalar>(
    op: &dyn MultilinearOperator,
    h: &GridFunction<T>,
    beta: usize,
    f: &[&GridFunction<T>],
) -> Result<GridFunction<T>> {
    if beta >= f.len() {
        return Err(domain(format!("slot {beta} out of range")));
    }
    let hf = &f[beta].clone() * h;
    let mut args = f.to_vec();
    args[beta] = &hf;
    T::apply_with(op, &args)
}

/// `F(z⃗) = e^{Σ_{j,i} b_j^i z_j^i} T(e^{-Σ_i b_1^i z_1^i} f_1, …, e^{-Σ_i b_m^i z_m^i} f_m)`.
///
/// `symbols[j]` and `z[j]` list the symbols and complex parameters of slot `j`.
pub fn conjugated_family(
    op: &dyn MultilinearOperator,
    symbols: &[Vec<GridFunction>],
    z: &[Vec<Complex64>],
    f: &[&ComplexFunction],
) -> Result<ComplexFunction> {
    let m = op.arity();
    if symbols.len() != m || z.len() != m || f.len() != m {
        return Err(domain("conjugated family needs one symbol list, z list and input per slot"));
    }
    let grid = op.grid();
    let mut total = ComplexFunction::zeros(grid);
    let mut inputs = Vec::with_capacity(m);
    for j in 0..m {
        if symbols[j].len() != z[j].len() {
            return Err(domain(format!("slot {j}: symbol and parameter counts differ")));
        }
        let mut phase = ComplexFunction::zeros(grid);
        for (b, &zi) in symbols[j].iter().zip(&z[j]) {
            phase = phase.zip_map(b, |acc, bv| acc + zi * bv)?;
        }
        total = &total + &phase;
        inputs.push(f[j].zip_map(&phase, |x, e| x * (-e).exp())?);
    }
    let refs: Vec<&ComplexFunction> = inputs.iter().collect();
    let tf = op.apply_complex(&refs)?;
    tf.zip_map(&total, |v, e| v * e.exp())
}
