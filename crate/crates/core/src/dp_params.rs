//! Privacy calculus for the binomial mechanism.
//!
//! Adding `Binomial(n_b, 1/2)` noise to a counting query is `(ε, δ)`-DP with
//! `ε = 10·sqrt(ln(2/δ) / n_b)` whenever `n_b > 30`. This module converts
//! between `ε` and the coin count `n_b`, provides the ideal functionality as a
//! sampling oracle, and centers noisy outputs.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::group::{PrimeGroup, ScalarField};

/// Smallest admissible coin count is `MIN_COINS_EXCLUSIVE + 1`.
pub const MIN_COINS_EXCLUSIVE: u64 = 30;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DpError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("n_b = {n_b} coins is too small: the binomial mechanism needs n_b > 30")]
    ResultTooSmall { n_b: u64 },
    #[error("n_b = {n_b} coins is too small: the binomial mechanism needs n_b > 30")]
    TooFewCoins { n_b: u64 },
    #[error("coin count overflow")]
    Overflow,
    #[error("n + K*n_b = {span} does not fit below q/2; the noisy sum would be ambiguous")]
    FieldTooSmall { span: u128 },
    #[error("value does not lift to a small integer")]
    AmbiguousLift,
}

/// `(ε, δ, n_b)` triple satisfying the binomial-mechanism bound.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub coins: u64,
}

impl PrivacyParams {
    /// Fewest coins achieving `epsilon` at `delta`.
    pub fn from_epsilon(epsilon: f64, delta: f64) -> Result<Self, DpError> {
        let coins = coins_for_privacy(epsilon, delta)?;
        Ok(PrivacyParams {
            epsilon: privacy_for_coins(coins, delta)?,
            delta,
            coins,
        })
    }

    pub fn from_coins(coins: u64, delta: f64) -> Result<Self, DpError> {
        Ok(PrivacyParams {
            epsilon: privacy_for_coins(coins, delta)?,
            delta,
            coins,
        })
    }

    /// Checks the triple is internally consistent (as when read back from a file).
    pub fn validate(&self) -> Result<(), DpError> {
        let eps = privacy_for_coins(self.coins, self.delta)?;
        if (eps - self.epsilon).abs() > 1e-12 * eps {
            return Err(DpError::InvalidEpsilon(self.epsilon));
        }
        Ok(())
    }

    /// `E|Z - n_b/2|` for `Z ~ Binomial(K·n_b, 1/2)`, in the normal approximation.
    pub fn expected_abs_noise(&self, provers: u64) -> f64 {
        let n = (provers * self.coins) as f64;
        (n / 4.0).sqrt() * (2.0 / std::f64::consts::PI).sqrt()
    }
}

fn check_delta(delta: f64) -> Result<(), DpError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(DpError::InvalidDelta(delta))
    }
}

/// `ε = 10·sqrt(ln(2/δ) / n_b)`.
pub fn privacy_for_coins(coins: u64, delta: f64) -> Result<f64, DpError> {
    check_delta(delta)?;
    if coins <= MIN_COINS_EXCLUSIVE {
        return Err(DpError::TooFewCoins { n_b: coins });
    }
    Ok(10.0 * ((2.0 / delta).ln() / coins as f64).sqrt())
}

/// Smallest `n_b` with `privacy_for_coins(n_b, δ) <= ε`, i.e.
/// `ceil(100·ln(2/δ)/ε²)` evaluated so that the round trip is exact in
/// floating point.
pub fn coins_for_privacy(epsilon: f64, delta: f64) -> Result<u64, DpError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(DpError::InvalidEpsilon(epsilon));
    }
    check_delta(delta)?;
    let exact = 100.0 * (2.0 / delta).ln() / (epsilon * epsilon);
    if !exact.is_finite() || exact > 1e18 {
        return Err(DpError::Overflow);
    }
    let mut coins = (exact.ceil() as u64).max(1);
    if coins <= MIN_COINS_EXCLUSIVE {
        return Err(DpError::ResultTooSmall { n_b: coins });
    }
    let eps_at = |n: u64| 10.0 * ((2.0 / delta).ln() / n as f64).sqrt();
    // Absorb rounding in the closed form.
    while coins > MIN_COINS_EXCLUSIVE + 1 && eps_at(coins - 1) <= epsilon {
        coins -= 1;
    }
    while eps_at(coins) > epsilon {
        coins += 1;
    }
    Ok(coins)
}

/// Output of the ideal functionality: `y = Σ_k (X_k + Δ_k)` with
/// `Δ_k ~ Binomial(n_b, 1/2)` drawn independently per prover.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealOutput<S> {
    pub y: S,
    pub deltas: Vec<u64>,
}

pub fn ideal_mechanism<G: PrimeGroup, R: Rng + ?Sized>(
    inputs: &[G::Scalar],
    coins: u64,
    rng: &mut R,
) -> Result<IdealOutput<G::Scalar>, DpError> {
    if coins <= MIN_COINS_EXCLUSIVE {
        return Err(DpError::TooFewCoins { n_b: coins });
    }
    let dist = Binomial::new(coins, 0.5).expect("p = 1/2 is valid");
    let mut y = G::Scalar::zero();
    let mut deltas = Vec::with_capacity(inputs.len());
    for x in inputs {
        let d = dist.sample(rng);
        deltas.push(d);
        y = y + *x + G::Scalar::from_u64(d);
    }
    Ok(IdealOutput { y, deltas })
}

/// Requires `n + K·n_b < q/2` so every honest noisy sum lifts unambiguously.
pub fn check_field_guard<G: PrimeGroup>(clients: u64, provers: u64, coins: u64) -> Result<(), DpError> {
    let span = clients as u128 + provers as u128 * coins as u128;
    let as_scalar = u64::try_from(span).map(G::Scalar::from_u64).ok();
    // span < q/2 iff the residue of span lifts to itself.
    match as_scalar.and_then(|s| s.to_centered_i128()) {
        Some(v) if v == span as i128 && span < i64::MAX as u128 => Ok(()),
        _ => Err(DpError::FieldTooSmall { span }),
    }
}

/// Centers a noisy sum: lifts `y` to `(-q/2, q/2]` and subtracts `floor(K·n_b/2)`.
pub fn debiased_estimate<G: PrimeGroup>(y: &G::Scalar, provers: u64, coins: u64) -> Result<i64, DpError> {
    let lifted = y.to_centered_i128().ok_or(DpError::AmbiguousLift)?;
    let centered = lifted - (provers as i128 * coins as i128) / 2;
    i64::try_from(centered).map_err(|_| DpError::AmbiguousLift)
}
