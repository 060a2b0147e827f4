//! Experiment configuration, the verification checks and their reports.

mod checks;
mod config;
mod instance;
mod norm;
mod random;
mod report;
mod runner;

pub use checks::domination::domination_certificate;
pub use config::*;
pub use instance::{
    aux_seed, gen_instance, trial_rng, verify_certificate, Certificate, CertificateCheck, ConcreteOperator, Instance,
    TrialInstance,
};
pub use norm::{estimate_operator_norm, haar_test_inputs};
pub use random::{calibrated_weight, random_bmo_symbol, random_input, random_martingale, random_weight};
pub use report::{ratio, CheckReport, DepthSummary, TrialReport};
pub use runner::{run_check, CheckKind};
