use crate::error::{config, Result};
use crate::sparse::{sparse_dominate_commutator, verify_sparsity, DominationCertificate};
use crate::verify::config::ExperimentConfig;
use crate::verify::instance::{Certificate, TrialInstance};
use crate::verify::report::TrialReport;
use crate::weights::weighted_bmo_norm;

pub(crate) fn precheck(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.slot_orders().iter().any(|&k| k > 1) {
        return Err(config("domination covers first-order commutators (order ≤ 1 per slot)"));
    }
    Ok(())
}

fn dominate(inst: &TrialInstance) -> Result<DominationCertificate> {
    sparse_dominate_commutator(&inst.base, &inst.commuted_symbols(), &inst.commuted, &inst.input_refs())
}

pub(crate) fn trial(cfg: &ExperimentConfig, inst: &TrialInstance, t: usize) -> Result<TrialReport> {
    let depth = inst.grid.depth();
    if inst.inputs.iter().any(|f| f.is_zero()) {
        return Ok(TrialReport::skipped(t, depth));
    }
    let mut r = TrialReport::new(t, depth);
    let cert = dominate(inst)?;
    let sp = verify_sparsity(&cert.collection);
    r.require(sp.passed, || {
        format!("sparsity: {}", sp.violation.as_ref().map_or(String::new(), |v| v.to_string()))
    });
    r.require(cert.min_slack >= -cfg.tolerance, || {
        format!("pointwise domination slack {:.3e} below -{}", cert.min_slack, cfg.tolerance)
    });
    r.set_sides(cert.realized_constant, cert.constant);
    r.min_slack = Some(cert.min_slack);
    r.constant = Some(cert.constant);
    for b in inst.commuted_symbols() {
        r.bmo_norms.push(weighted_bmo_norm(&b, None)?);
    }
    r.stat("cubes", cert.collection.len() as f64);
    r.stat("kernel_bound", cert.kernel_bound);
    r.stat("max_threshold", cert.max_threshold);
    r.stat("carleson", cert.collection.carleson_constant());
    Ok(r)
}

/// Certificate of trial 0 at the grid depth, with its instance embedded.
pub fn domination_certificate(cfg: &ExperimentConfig) -> Result<Certificate> {
    cfg.validate()?;
    precheck(cfg)?;
    let inst = TrialInstance::generate(cfg, cfg.grid.depth, 0)?;
    let cert = dominate(&inst)?;
    Ok(Certificate::new(&cert, Some(inst.to_instance())))
}
