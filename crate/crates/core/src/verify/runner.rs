use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks;
use super::config::ExperimentConfig;
use super::instance::TrialInstance;
use super::report::{CheckReport, DepthSummary, TrialReport};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Domination,
    Bloom,
    LowerBound,
    Cauchy,
    Conjugation,
    Maximal,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        CheckKind::Domination,
        CheckKind::Bloom,
        CheckKind::LowerBound,
        CheckKind::Cauchy,
        CheckKind::Conjugation,
        CheckKind::Maximal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Domination => "domination",
            CheckKind::Bloom => "bloom",
            CheckKind::LowerBound => "lowerbound",
            CheckKind::Cauchy => "cauchy",
            CheckKind::Conjugation => "conjugation",
            CheckKind::Maximal => "maximal",
        }
    }

    /// Whether the depth variation of the tracked quantity is asserted.
    pub fn depth_asserted(self) -> bool {
        matches!(self, CheckKind::Domination | CheckKind::Bloom | CheckKind::Maximal)
    }

    /// Per-depth quantity whose variation is tracked: the certificate
    /// constant for domination, the max ratio otherwise.
    fn tracked(self, d: &DepthSummary) -> f64 {
        match self {
            CheckKind::Domination => d.max_constant.unwrap_or(0.0),
            _ => d.max_ratio,
        }
    }

    fn precheck(self, cfg: &ExperimentConfig) -> Result<()> {
        match self {
            CheckKind::Domination => checks::domination::precheck(cfg),
            CheckKind::Bloom => checks::bloom::precheck(cfg),
            CheckKind::LowerBound => checks::lower_bound::precheck(cfg),
            CheckKind::Cauchy => checks::cauchy::precheck(cfg),
            CheckKind::Conjugation | CheckKind::Maximal => Ok(()),
        }
    }

    fn trial(self, cfg: &ExperimentConfig, inst: &TrialInstance, trial: usize) -> Result<TrialReport> {
        match self {
            CheckKind::Domination => checks::domination::trial(cfg, inst, trial),
            CheckKind::Bloom => checks::bloom::trial(cfg, inst, trial),
            CheckKind::LowerBound => checks::lower_bound::trial(cfg, inst, trial),
            CheckKind::Cauchy => checks::cauchy::trial(cfg, inst, trial),
            CheckKind::Conjugation => checks::conjugation::trial(cfg, inst, trial),
            CheckKind::Maximal => checks::maximal::trial(cfg, inst, trial),
        }
    }
}

impl std::str::FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check {s}")))
    }
}

/// max/min of the per-depth values; 1 when all vanish.
fn variation(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Runs every `(depth, trial)` pair of `cfg` in parallel and merges the
/// reports in depth, then trial order.
///
/// Configuration errors abort the run; any other error fails its trial.
pub fn run_check(kind: CheckKind, cfg: &ExperimentConfig) -> Result<CheckReport> {
    cfg.validate()?;
    kind.precheck(cfg)?;
    let jobs: Vec<(u32, usize)> = cfg
        .depth_list()
        .into_iter()
        .flat_map(|d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();
    let results: Vec<Result<(TrialReport, f64)>> = jobs
        .par_iter()
        .map(|&(depth, t)| {
            let start = Instant::now();
            let inst = TrialInstance::generate(cfg, depth, t)?;
            let rep = match kind.trial(cfg, &inst, t) {
                Ok(r) => r,
                Err(e @ (Error::Config(_) | Error::Io(_))) => return Err(e),
                Err(e) => {
                    let mut r = TrialReport::new(t, depth);
                    r.fail(e.to_string());
                    r
                }
            };
            Ok((rep, start.elapsed().as_secs_f64() * 1e3))
        })
        .collect();

    let mut report = CheckReport::new(kind.name(), cfg.clone());
    for r in results {
        let (rep, ms) = r?;
        if !rep.passed && report.first_failure.is_none() {
            report.first_failure = Some(format!(
                "depth {} trial {}: {}",
                rep.depth,
                rep.trial,
                rep.failure.as_deref().unwrap_or("assertion failed")
            ));
        }
        report.passed &= rep.passed;
        report.trials.push(rep);
        report.timings_ms.push(ms);
    }
    report.depths = cfg
        .depth_list()
        .into_iter()
        .map(|d| DepthSummary::of(d, &report.trials))
        .collect();
    let tracked: Vec<f64> = report.depths.iter().map(|d| kind.tracked(d)).collect();
    report.depth_variation = variation(&tracked);
    report.depth_asserted = kind.depth_asserted() && report.depths.len() > 1;
    if report.depth_asserted && !(report.depth_variation < cfg.options.depth_factor) {
        report.passed = false;
        report.first_failure.get_or_insert_with(|| {
            format!(
                "depth variation {:.3} not below {} (per-depth {:?})",
                report.depth_variation, cfg.options.depth_factor, tracked
            )
        });
    }
    Ok(report)
}
