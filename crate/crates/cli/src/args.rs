//! Command-line flags and the optional TOML file that overrides them.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use vdp_core::group::GroupId;
use vdp_harness::bench::Sweep;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "vdp", version, about = "Verifiable differentially private counting and histograms")]
pub struct Cli {
    /// TOML file whose values override the flags, one table per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Group backend (ristretto255, toy61, toy32, toy16, toy-q101).
    #[arg(long, global = true, env = "VDP_GROUP")]
    pub group: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert between ε and the number of noise coins.
    Params(ParamsArgs),
    /// Run one in-process session and write its transcript.
    Run(RunArgs),
    /// Re-verify a transcript file.
    Verify(VerifyArgs),
    /// Time the protocol phases.
    Bench(BenchArgs),
    /// Estimate ε empirically from many sessions on neighboring datasets.
    Audit(AuditArgs),
}

#[derive(Debug, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamsArgs {
    #[arg(long, conflicts_with = "coins", required_unless_present = "coins")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub coins: Option<u64>,
    /// Decimal or `2^-k`.
    #[arg(long, default_value = "2^-10")]
    pub delta: String,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunArgs {
    /// Number of provers.
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Number of clients.
    #[arg(long, default_value_t = 100)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub bins: u32,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value = "2^-10")]
    pub delta: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the transcript.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `party:behavior`, e.g. `prover1:tamper_output`. Repeatable.
    #[arg(long = "adversary")]
    pub adversaries: Vec<String>,
    /// Verify bit proofs in batches.
    #[arg(long)]
    pub batch_verify: bool,
}

impl Default for RunArgs {
    fn default() -> Self {
        RunArgs {
            k: 2,
            n: 100,
            bins: 1,
            epsilon: 1.0,
            delta: "2^-10".into(),
            seed: 0,
            out: None,
            adversaries: Vec::new(),
            batch_verify: false,
        }
    }
}

#[derive(Debug, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchArgs {
    /// Sweep one parameter: coins, clients or bins.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seconds per configuration before repetitions stop early.
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub bins: u32,
    #[arg(long, default_value_t = 1024)]
    pub coins: u64,
    /// Also time single exponentiations.
    #[arg(long)]
    pub micro: bool,
}

impl Default for BenchArgs {
    fn default() -> Self {
        BenchArgs {
            sweep: None,
            out: None,
            budget: None,
            reps: 5,
            k: 1,
            n: 1000,
            bins: 1,
            coins: 1024,
            micro: false,
        }
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 100)]
    pub coins: u64,
    #[arg(long, default_value = "2^-10")]
    pub delta: String,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Clients per dataset; the two datasets differ in the first client.
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Default for AuditArgs {
    fn default() -> Self {
        AuditArgs {
            coins: 100,
            delta: "2^-10".into(),
            trials: 100_000,
            seed: 0,
            n: 1,
            out: None,
        }
    }
}

/// Parses `0.001`, `2^-10` or `2^(-10)`.
pub fn parse_delta(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let bad = || CliError::Usage(format!("cannot parse delta `{s}` (use a decimal or 2^-k)"));
    if let Some(exp) = s.strip_prefix("2^") {
        let exp = exp.trim_start_matches('(').trim_end_matches(')');
        let k: i32 = exp.parse().map_err(|_| bad())?;
        return Ok(2f64.powi(k));
    }
    s.parse().map_err(|_| bad())
}

pub fn parse_group(s: &str) -> Result<GroupId, CliError> {
    s.parse().map_err(|e| CliError::Usage(format!("{e}")))
}

pub fn parse_sweep(s: &str) -> Result<Sweep, CliError> {
    s.parse().map_err(CliError::Usage)
}

/// Top-level keys of a config file; each subcommand reads its own table.
#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    group: Option<String>,
    params: Option<toml::Table>,
    run: Option<toml::Table>,
    verify: Option<toml::Table>,
    bench: Option<toml::Table>,
    audit: Option<toml::Table>,
}

fn merge<T>(flags: &mut T, table: Option<toml::Table>) -> Result<(), CliError>
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    let Some(table) = table else { return Ok(()) };
    let mut base = toml::Table::try_from(&*flags).map_err(|e| CliError::Usage(e.to_string()))?;
    base.extend(table);
    *flags = base
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("config: {}", e.message())))?;
    Ok(())
}

impl Cli {
    /// Applies the config file, if any, on top of the parsed flags.
    pub fn apply_config(&mut self) -> Result<(), CliError> {
        let Some(path) = self.config.clone() else { return Ok(()) };
        let file = load(&path)?;
        if file.group.is_some() {
            self.group = file.group;
        }
        match &mut self.command {
            Command::Params(a) => merge(a, file.params),
            Command::Run(a) => merge(a, file.run),
            Command::Verify(a) => merge(a, file.verify),
            Command::Bench(a) => merge(a, file.bench),
            Command::Audit(a) => merge(a, file.audit),
        }
    }
}

fn load(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e.message())))
}
