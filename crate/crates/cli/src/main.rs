use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bloomlab::verify::{
    domination_certificate, gen_instance, run_check, verify_certificate, Certificate, CheckKind, CheckReport,
    ExperimentConfig,
};
use bloomlab::Error;
use clap::{Args, Parser, Subcommand};

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "bloomlab", version, about = "Run and re-verify dyadic commutator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run at this depth only.
    #[arg(long)]
    depth: Option<u32>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Suppress the summary line.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sparse domination certificates for the commutator.
    CheckDomination(RunArgs),
    /// Two-weight (Bloom) upper bound and its sparse-form chain.
    CheckBloom(RunArgs),
    /// Lower bound: BMO oscillation recovered from the commutator norm.
    CheckLowerbound(RunArgs),
    /// Iterated commutators as derivatives of the conjugated family.
    CheckCauchy(RunArgs),
    /// Weight characteristics under conjugation by e^{Re(bz)}.
    CheckConjugation(RunArgs),
    /// Maximal truncation against the dyadic maximal function.
    CheckMaximal(RunArgs),
    /// Re-verify a certificate without rerunning the construction.
    VerifyCertificate {
        /// Certificate file (JSON).
        #[arg(value_name = "CERTIFICATE")]
        certificate: PathBuf,
        /// Allowed negative pointwise slack.
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        #[arg(long)]
        quiet: bool,
    },
    /// Write trial 0 of a config as a concrete instance file.
    GenInstance(RunArgs),
}

enum Failure {
    Assertion(String),
    Config(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => Failure::Io(io.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&args.config).map_err(|e| io_err(&args.config, e))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    cfg.base_dir = args.config.parent().map(Path::to_path_buf);
    Ok(cfg.with_overrides(args.seed, args.depth, args.trials)?)
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Io(e.to_string()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// One row per trial; characteristic and stat columns are the union of keys.
fn write_csv(path: &Path, report: &CheckReport) -> Result<(), Failure> {
    let chars: BTreeSet<&String> = report.trials.iter().flat_map(|t| t.characteristics.keys()).collect();
    let stats: BTreeSet<&String> = report.trials.iter().flat_map(|t| t.stats.keys()).collect();
    let n_bmo = report.trials.iter().map(|t| t.bmo_norms.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header: Vec<String> = [
        "check", "depth", "trial", "skipped", "passed", "lhs", "rhs", "ratio", "min_slack", "constant", "millis",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..n_bmo).map(|i| format!("bmo[{i}]")));
    header.extend(chars.iter().map(|k| format!("char:{k}")));
    header.extend(stats.iter().map(|k| format!("stat:{k}")));
    header.push("failure".into());
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (t, ms) in report.trials.iter().zip(&report.timings_ms) {
        let mut row = vec![
            report.check.clone(),
            t.depth.to_string(),
            t.trial.to_string(),
            t.skipped.to_string(),
            t.passed.to_string(),
            t.lhs.to_string(),
            t.rhs.to_string(),
            t.ratio.to_string(),
            opt(t.min_slack),
            opt(t.constant),
            format!("{ms:.3}"),
        ];
        row.extend((0..n_bmo).map(|i| opt(t.bmo_norms.get(i).copied())));
        row.extend(chars.iter().map(|k| opt(t.characteristics.get(*k).copied())));
        row.extend(stats.iter().map(|k| opt(t.stats.get(*k).copied())));
        row.push(t.failure.clone().unwrap_or_default());
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn run_check_command(kind: CheckKind, args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    let report = run_check(kind, &cfg)?;
    ensure_dir(&args.out)?;
    write_file(&args.out.join("report.json"), &to_json(&report)?)?;
    write_csv(&args.out.join("trials.csv"), &report)?;
    if kind == CheckKind::Domination {
        let cert = domination_certificate(&cfg)?;
        write_file(&args.out.join("certificate.json"), &to_json(&cert)?)?;
    }
    if !args.quiet {
        println!("{}", report.summary_line());
    }
    match report.first_failure {
        Some(f) if !report.passed => Err(Failure::Assertion(format!("{}: {f}", kind.name()))),
        _ => Ok(()),
    }
}

fn verify_command(path: &Path, tolerance: f64, quiet: bool) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let cert = Certificate::from_json(&text)?;
    let check = verify_certificate(&cert, tolerance)?;
    if !quiet {
        let slack = check.min_slack.map_or_else(|| "n/a".to_string(), |s| format!("{s:.6e}"));
        println!(
            "verify-certificate: {} | cubes {} | constant {:.6e} | min slack {slack}",
            if check.passed { "PASS" } else { "FAIL" },
            cert.collection.cubes.len(),
            cert.constant
        );
    }
    if check.passed {
        Ok(())
    } else {
        Err(Failure::Assertion(check.failure.unwrap_or_else(|| "certificate rejected".into())))
    }
}

fn gen_instance_command(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    let inst = gen_instance(&cfg)?;
    ensure_dir(&args.out)?;
    let path = args.out.join("instance.json");
    write_file(&path, &to_json(&inst)?)?;
    if !args.quiet {
        println!("gen-instance: wrote {}", path.display());
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("BLOOMLAB_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Failure::Config(format!("BLOOMLAB_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match &cli.command {
        Command::CheckDomination(a) => run_check_command(CheckKind::Domination, a),
        Command::CheckBloom(a) => run_check_command(CheckKind::Bloom, a),
        Command::CheckLowerbound(a) => run_check_command(CheckKind::LowerBound, a),
        Command::CheckCauchy(a) => run_check_command(CheckKind::Cauchy, a),
        Command::CheckConjugation(a) => run_check_command(CheckKind::Conjugation, a),
        Command::CheckMaximal(a) => run_check_command(CheckKind::Maximal, a),
        Command::VerifyCertificate { certificate, tolerance, quiet } => verify_command(certificate, *tolerance, *quiet),
        Command::GenInstance(a) => gen_instance_command(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(m)) => {
            eprintln!("assertion failed: {m}");
            ExitCode::from(EXIT_ASSERTION)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(m)) => {
            eprintln!("i/o error: {m}");
            ExitCode::from(EXIT_IO)
        }
    }
}
