use super::min_value;
use crate::dyadic::{dyadic_maximal, lp_norm, weak_lp_norm, GridFunction};
use crate::error::Result;
use crate::operators::MultilinearOperator;
use crate::verify::config::ExperimentConfig;
use crate::verify::instance::TrialInstance;
use crate::verify::report::TrialReport;

/// Allowed negative slack of `M(T f⃗) - T_♯ f⃗`.
const CLAIM_TOLERANCE: f64 = 1e-12;

pub(crate) fn trial(_cfg: &ExperimentConfig, inst: &TrialInstance, t: usize) -> Result<TrialReport> {
    let depth = inst.grid.depth();
    let f = inst.input_refs();
    let mut denom = 1.0;
    for fj in &f {
        denom *= lp_norm(*fj, 1.0, None)?;
    }
    if denom == 0.0 {
        return Ok(TrialReport::skipped(t, depth));
    }
    let mut r = TrialReport::new(t, depth);
    let m = inst.base.arity() as f64;
    let tf = inst.base.apply_fast(&f)?;
    let mx = dyadic_maximal(&tf);
    let sharp: GridFunction = inst.base.maximal_truncation(&f)?;
    let slack = min_value(&(&mx - &sharp));
    let tol = CLAIM_TOLERANCE * mx.max_abs().max(1.0);
    r.require(slack >= -tol, || format!("T_sharp exceeds M(Tf) by {:.3e}", -slack));
    r.min_slack = Some(slack);
    r.set_sides(weak_lp_norm(&sharp, 1.0 / m, None)?, denom);
    r.stat("weak_norm_tf", weak_lp_norm(&tf, 1.0 / m, None)?);
    Ok(r)
}
