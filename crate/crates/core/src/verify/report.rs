use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SCHEMA_VERSION};

/// One trial of one check at one depth.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub depth: u32,
    /// Zero inputs (0/0): counted, never failed.
    pub skipped: bool,
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, 0 when `lhs = 0`.
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default)]
    pub characteristics: BTreeMap<String, f64>,
    #[serde(default)]
    pub bmo_norms: Vec<f64>,
    #[serde(default)]
    pub stats: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl TrialReport {
    pub fn new(trial: usize, depth: u32) -> Self {
        Self {
            trial,
            depth,
            passed: true,
            ..Self::default()
        }
    }

    pub fn skipped(trial: usize, depth: u32) -> Self {
        Self {
            skipped: true,
            ..Self::new(trial, depth)
        }
    }

    /// Sets both sides and the ratio.
    pub fn set_sides(&mut self, lhs: f64, rhs: f64) {
        self.lhs = lhs;
        self.rhs = rhs;
        self.ratio = ratio(lhs, rhs);
    }

    /// Records a failed assertion; the first one wins.
    pub fn fail(&mut self, msg: impl Into<String>) {
        self.passed = false;
        if self.failure.is_none() {
            self.failure = Some(msg.into());
        }
    }

    /// Fails unless `cond`.
    pub fn require(&mut self, cond: bool, msg: impl FnOnce() -> String) {
        if !cond {
            self.fail(msg());
        }
    }

    pub fn stat(&mut self, key: &str, v: f64) {
        self.stats.insert(key.to_string(), v);
    }
}

/// `a / b` with `0/0 = 0`.
pub fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSummary {
    pub depth: u32,
    pub trials: usize,
    pub skipped: usize,
    pub failed: usize,
    pub max_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<f64>,
}

impl DepthSummary {
    pub fn of(depth: u32, trials: &[TrialReport]) -> Self {
        let at: Vec<&TrialReport> = trials.iter().filter(|t| t.depth == depth).collect();
        let fold_opt = |f: fn(&TrialReport) -> Option<f64>, max: bool| {
            at.iter().filter_map(|t| f(t)).reduce(|a, b| if max { a.max(b) } else { a.min(b) })
        };
        Self {
            depth,
            trials: at.len(),
            skipped: at.iter().filter(|t| t.skipped).count(),
            failed: at.iter().filter(|t| !t.passed).count(),
            max_ratio: at.iter().filter(|t| !t.skipped).map(|t| t.ratio).fold(0.0, f64::max),
            max_constant: fold_opt(|t| t.constant, true),
            min_slack: fold_opt(|t| t.min_slack, false),
        }
    }
}

/// Report of one check over every depth and trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub check: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
    pub depths: Vec<DepthSummary>,
    /// max/min over depths of the tracked per-depth maximum.
    pub depth_variation: f64,
    /// Whether `depth_variation` is asserted against `options.depth_factor`.
    pub depth_asserted: bool,
    pub trials: Vec<TrialReport>,
    /// Wall time per trial, aligned with `trials`; kept apart so reports
    /// compare equal across runs.
    pub timings_ms: Vec<f64>,
}

impl CheckReport {
    pub fn new(check: &str, config: ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            check: check.to_string(),
            config,
            passed: true,
            first_failure: None,
            depths: Vec::new(),
            depth_variation: 1.0,
            depth_asserted: false,
            trials: Vec::new(),
            timings_ms: Vec::new(),
        }
    }

    pub fn max_ratio(&self) -> f64 {
        self.depths.iter().map(|d| d.max_ratio).fold(0.0, f64::max)
    }

    pub fn min_slack(&self) -> Option<f64> {
        self.depths.iter().filter_map(|d| d.min_slack).reduce(f64::min)
    }

    pub fn max_constant(&self) -> Option<f64> {
        self.depths.iter().filter_map(|d| d.max_constant).reduce(f64::max)
    }

    /// One-line summary: check, pass/fail, max ratio, min slack.
    pub fn summary_line(&self) -> String {
        let mut s = format!(
            "{}: {} | trials {} | max ratio {:.6e}",
            self.check,
            if self.passed { "PASS" } else { "FAIL" },
            self.trials.len(),
            self.max_ratio()
        );
        if let Some(m) = self.min_slack() {
            s.push_str(&format!(" | min slack {m:.6e}"));
        }
        if let Some(c) = self.max_constant() {
            s.push_str(&format!(" | max constant {c:.6e}"));
        }
        if self.depths.len() > 1 {
            s.push_str(&format!(" | depth variation {:.3}", self.depth_variation));
        }
        if let Some(f) = &self.first_failure {
            s.push_str(&format!(" | first failure: {f}"));
        }
        s
    }
}
