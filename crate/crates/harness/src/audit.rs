//! Empirical privacy audit.
//!
//! Runs many sessions on two neighboring datasets, histograms the released
//! estimates, and reports the largest `ln((P[M(X) ∈ T] - δ) / P[M(X') ∈ T])`
//! over one-sided threshold sets `T` in both directions.

use std::collections::BTreeMap;

use vdp_core::dp_params::privacy_for_coins;

use crate::config::{ConfigError, InputSpec, SessionConfig};
use crate::session::run_session;

pub const MIN_TRIALS: u64 = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("at least {MIN_TRIALS} trials per dataset are needed, got {0}")]
    InsufficientTrials(u64),
    #[error("datasets must have equal size and differ in at most one client")]
    NotNeighbors,
    #[error("the audit covers counting queries (one bin)")]
    Histogram,
    #[error("session {trial} was rejected: {detail}")]
    Rejected { trial: u64, detail: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HistogramRow {
    pub output: i64,
    pub count_x: u64,
    pub count_neighbor: u64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AuditReport {
    pub coins: u64,
    pub delta: f64,
    pub trials: u64,
    pub epsilon_formula: f64,
    pub epsilon_hat: f64,
    /// Threshold set attaining `epsilon_hat`, e.g. `y >= 57` or `y <= 40`.
    pub witness: Option<String>,
    pub histogram: Vec<HistogramRow>,
}

impl AuditReport {
    pub fn passes(&self) -> bool {
        self.epsilon_hat <= self.epsilon_formula
    }
}

/// Largest δ-corrected log ratio over threshold sets, in both directions.
/// Returns the estimate and the attaining set.
pub fn estimate_epsilon(
    hx: &BTreeMap<i64, u64>,
    hy: &BTreeMap<i64, u64>,
    delta: f64,
) -> (f64, Option<String>) {
    let nx: u64 = hx.values().sum();
    let ny: u64 = hy.values().sum();
    let mut keys: Vec<i64> = hx.keys().chain(hy.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();

    // Tail masses P[y >= t] and P[y <= t] for both samples.
    let tails = |h: &BTreeMap<i64, u64>, n: u64| {
        let mut upper = Vec::with_capacity(keys.len());
        let mut acc = 0u64;
        for k in keys.iter().rev() {
            acc += h.get(k).unwrap_or(&0);
            upper.push(acc as f64 / n as f64);
        }
        upper.reverse();
        let mut lower = Vec::with_capacity(keys.len());
        acc = 0;
        for k in &keys {
            acc += h.get(k).unwrap_or(&0);
            lower.push(acc as f64 / n as f64);
        }
        (upper, lower)
    };
    let (ux, lx) = tails(hx, nx);
    let (uy, ly) = tails(hy, ny);

    let mut best = (0.0f64, None);
    let mut consider = |p: f64, q: f64, label: String| {
        if p - delta > 0.0 && q > 0.0 {
            let e = ((p - delta) / q).ln();
            if e > best.0 {
                best = (e, Some(label));
            }
        }
    };
    for (i, k) in keys.iter().enumerate() {
        consider(ux[i], uy[i], format!("y >= {k}"));
        consider(uy[i], ux[i], format!("y >= {k}"));
        consider(lx[i], ly[i], format!("y <= {k}"));
        consider(ly[i], lx[i], format!("y <= {k}"));
    }
    best
}

fn neighbors(x: &[u64], y: &[u64]) -> bool {
    x.len() == y.len() && x.iter().zip(y).filter(|(a, b)| a != b).count() <= 1
}

/// Audits the protocol on datasets `x` and `x_neighbor` (one bit per
/// client). Each trial is a full session with its own seed.
pub fn audit_privacy(
    config: &SessionConfig,
    x: &[u64],
    x_neighbor: &[u64],
    trials: u64,
) -> Result<AuditReport, AuditError> {
    if trials < MIN_TRIALS {
        return Err(AuditError::InsufficientTrials(trials));
    }
    if !neighbors(x, x_neighbor) {
        return Err(AuditError::NotNeighbors);
    }
    if config.bins != 1 {
        return Err(AuditError::Histogram);
    }
    let sample = |data: &[u64], stream: u64| -> Result<BTreeMap<i64, u64>, AuditError> {
        let base = SessionConfig {
            clients: data.len() as u64,
            inputs: InputSpec::Explicit(data.iter().map(|&v| vec![v]).collect()),
            ..config.clone()
        };
        let mut h = BTreeMap::new();
        for t in 0..trials {
            let cfg = SessionConfig {
                seed: config.seed ^ (stream << 48) ^ t,
                ..base.clone()
            };
            let run = run_session(&cfg, &[])?;
            let estimate = match run.outcome().estimates() {
                Some(e) => e[0],
                None => {
                    return Err(AuditError::Rejected {
                        trial: t,
                        detail: format!("{:?}", run.outcome()),
                    })
                }
            };
            *h.entry(estimate).or_insert(0) += 1;
        }
        Ok(h)
    };
    let hx = sample(x, 1)?;
    let hy = sample(x_neighbor, 2)?;
    let (epsilon_hat, witness) = estimate_epsilon(&hx, &hy, config.privacy.delta);

    let mut keys: Vec<i64> = hx.keys().chain(hy.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let histogram = keys
        .into_iter()
        .map(|k| HistogramRow {
            output: k,
            count_x: *hx.get(&k).unwrap_or(&0),
            count_neighbor: *hy.get(&k).unwrap_or(&0),
        })
        .collect();
    Ok(AuditReport {
        coins: config.privacy.coins,
        delta: config.privacy.delta,
        trials,
        epsilon_formula: privacy_for_coins(config.privacy.coins, config.privacy.delta)
            .map_err(ConfigError::from)?,
        epsilon_hat,
        witness,
        histogram,
    })
}
