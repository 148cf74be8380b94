mod args;

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use vdp_core::dp_params::PrivacyParams;
use vdp_core::group::GroupId;
use vdp_core::transcript::{verify_session_json, OutcomeRecord};
use vdp_harness::adversary::AdversarySpec;
use vdp_harness::audit::{audit_privacy, AuditReport};
use vdp_harness::bench::{exponentiation_micros, run_benchmark, run_sweep, to_csv, BenchConfig};
use vdp_harness::config::{ConfigError, SessionConfig};
use vdp_harness::session::run_session;

use args::{parse_delta, parse_group, parse_sweep, AuditArgs, BenchArgs, Cli, Command, ParamsArgs, RunArgs, VerifyArgs};

/// Exit status when a session, transcript or audit is rejected.
const REJECTED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(String),
    #[error("malformed transcript: {0}")]
    Malformed(String),
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    let result = cli.apply_config().and_then(|()| dispatch(&cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    let group = |default: GroupId| cli.group.as_deref().map_or(Ok(default), parse_group);
    match &cli.command {
        Command::Params(a) => params(a),
        Command::Run(a) => run(a, group(GroupId::Ristretto255)?),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a, group(GroupId::Ristretto255)?),
        Command::Audit(a) => audit(a, group(GroupId::Toy32)?),
    }
}

fn privacy_error(e: vdp_core::dp_params::DpError) -> CliError {
    CliError::Usage(e.to_string())
}

fn params(a: &ParamsArgs) -> Result<u8, CliError> {
    let delta = parse_delta(&a.delta)?;
    let p = match (a.epsilon, a.coins) {
        (Some(eps), None) => PrivacyParams::from_epsilon(eps, delta),
        (None, Some(coins)) => PrivacyParams::from_coins(coins, delta),
        _ => return Err(CliError::Usage("give exactly one of --epsilon and --coins".into())),
    }
    .map_err(privacy_error)?;
    println!("epsilon = {:.4}", p.epsilon);
    println!("delta = {}", p.delta);
    println!("n_b = {}", p.coins);
    println!("expected |noise| per prover = {:.2}", p.expected_abs_noise(1));
    Ok(0)
}

fn run(a: &RunArgs, group: GroupId) -> Result<u8, CliError> {
    let privacy = PrivacyParams::from_epsilon(a.epsilon, parse_delta(&a.delta)?).map_err(privacy_error)?;
    let adversaries = a
        .adversaries
        .iter()
        .map(|s| s.parse::<AdversarySpec>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut config = SessionConfig::new(a.k, a.n, a.bins, privacy).with_group(group).with_seed(a.seed);
    config.batch_verify = a.batch_verify;
    let result = run_session(&config, &adversaries)?;
    let json = result.transcript.to_json();
    if let Some(out) = &a.out {
        std::fs::write(out, &json).map_err(|e| io_err(out, e))?;
    }

    // Decide from the serialized record, as an outside auditor would.
    let report = verify_session_json(&json).map_err(|e| CliError::Malformed(e.0))?;
    println!(
        "group {group}, K = {}, n = {}, bins = {}, epsilon = {:.4}, n_b = {}",
        a.k, a.n, a.bins, privacy.epsilon, privacy.coins
    );
    match report.verdict() {
        Ok(outcome) => {
            print_accepted(outcome, Some(&result.true_counts));
            Ok(0)
        }
        Err(r) => {
            println!("REJECTED at stage {}: blame {} ({})", r.stage, r.blame, r.detail);
            Ok(REJECTED)
        }
    }
}

fn print_accepted(outcome: &OutcomeRecord, truth: Option<&[u64]>) {
    println!("ACCEPTED");
    if let OutcomeRecord::Accepted { aggregates, excluded_clients } = outcome {
        for a in aggregates {
            match truth.and_then(|t| t.get(a.bin as usize)) {
                Some(t) => println!("bin {}: estimate {} (true count {t})", a.bin, a.estimate),
                None => println!("bin {}: estimate {}", a.bin, a.estimate),
            }
        }
        if !excluded_clients.is_empty() {
            println!("excluded clients: {excluded_clients:?}");
        }
    }
}

fn verify(a: &VerifyArgs) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| io_err(&a.input, e))?;
    let report = verify_session_json(&text).map_err(|e| CliError::Malformed(e.0))?;
    match report.verdict() {
        Ok(outcome) => {
            print_accepted(outcome, None);
            Ok(0)
        }
        Err(r) => {
            println!("REJECTED at stage {}: blame {} ({})", r.stage, r.blame, r.detail);
            Ok(REJECTED)
        }
    }
}

fn bench(a: &BenchArgs, group: GroupId) -> Result<u8, CliError> {
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let budget = match a.budget {
        Some(s) if !(s.is_finite() && s > 0.0) => return Err(CliError::Usage(format!("bad --budget {s}"))),
        Some(s) => Some(Duration::from_secs_f64(s)),
        None => None,
    };
    let base = BenchConfig {
        group,
        provers: a.k,
        clients: a.n,
        bins: a.bins,
        coins: a.coins,
        reps: a.reps,
        budget,
        seed: 0,
    };
    SessionConfig::new(a.k, a.n, a.bins, PrivacyParams::from_coins(a.coins, 1.0 / 1024.0).map_err(privacy_error)?)
        .validate()?;
    let rows = match &a.sweep {
        Some(s) => run_sweep(parse_sweep(s)?, &base),
        None => run_benchmark(&base),
    };
    let csv = to_csv(&rows);
    match &a.out {
        Some(out) => std::fs::write(out, &csv).map_err(|e| io_err(out, e))?,
        None => print!("{csv}"),
    }
    if a.micro {
        for g in [GroupId::Toy61, GroupId::Ristretto255] {
            println!("exponentiation {g}: {:.2} us", exponentiation_micros(g, 2000));
        }
    }
    Ok(0)
}

fn audit(a: &AuditArgs, group: GroupId) -> Result<u8, CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let privacy = PrivacyParams::from_coins(a.coins, parse_delta(&a.delta)?).map_err(privacy_error)?;
    let config = SessionConfig::new(1, a.n, 1, privacy).with_group(group).with_seed(a.seed);
    let x = vec![0u64; a.n as usize];
    let mut neighbor = x.clone();
    neighbor[0] = 1;
    let report = audit_privacy(&config, &x, &neighbor, a.trials).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(out) = &a.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(out, json).map_err(|e| io_err(out, e))?;
    }
    print!("{}", summary(&report, group));
    Ok(if report.passes() { 0 } else { REJECTED })
}

fn summary(r: &AuditReport, group: GroupId) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "group {group}, n_b = {}, delta = {}, trials = {} per dataset", r.coins, r.delta, r.trials);
    let _ = writeln!(s, "epsilon (formula) = {:.4}", r.epsilon_formula);
    let _ = writeln!(
        s,
        "epsilon (empirical) = {:.4}{}",
        r.epsilon_hat,
        r.witness.as_deref().map(|w| format!(" at {w}")).unwrap_or_default()
    );
    let _ = writeln!(s, "{}", if r.passes() { "PASS" } else { "FAIL" });
    let _ = writeln!(s, "output count_x count_neighbor");
    for row in &r.histogram {
        let _ = writeln!(s, "{} {} {}", row.output, row.count_x, row.count_neighbor);
    }
    s
}
