//! Scripted misbehavior, one behavior per party.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use vdp_core::encoding::Writer;
use vdp_core::group::{hash_to_scalar, PrimeGroup, PublicParams, ScalarField};
use vdp_core::morra::{HonestContributor, MorraCommit, MorraContribution, MorraContributor, MorraReveal};
use vdp_core::party::PartyId;
use vdp_core::protocol::Stage;

use crate::config::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Honest,
    /// Prover adds one to its published `y_k`.
    TamperOutput,
    /// Prover commits to the value 2 in place of one noise bit.
    NonbitCommitment,
    /// Party opens one coin commitment to a different value.
    MorraMisreveal,
    /// Party commits to its coin values last, as a function of everyone
    /// else's commitments, then reveals honestly.
    MorraAdaptive,
    /// Prover leaves an accepted client's share out of its sum.
    ExcludeClient(u64),
    /// Client hands its shares to a prover and submits an invalid input
    /// (value 2, or a two-hot vector) hoping the collusion gets it through.
    ColludeIllegalInput,
    /// Party commits to its coins and never reveals them.
    Silent,
}

impl Behavior {
    pub fn name(&self) -> String {
        match self {
            Behavior::Honest => "honest".into(),
            Behavior::TamperOutput => "tamper_output".into(),
            Behavior::NonbitCommitment => "nonbit_commitment".into(),
            Behavior::MorraMisreveal => "morra_misreveal".into(),
            Behavior::MorraAdaptive => "morra_adaptive".into(),
            Behavior::ExcludeClient(t) => format!("exclude_client({t})"),
            Behavior::ColludeIllegalInput => "collude_illegal_input".into(),
            Behavior::Silent => "silent".into(),
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Behavior {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(arg) = s.strip_prefix("exclude_client(").and_then(|r| r.strip_suffix(')')) {
            let t = arg
                .trim()
                .parse()
                .map_err(|_| ConfigError::Adversary(format!("bad client index in `{s}`")))?;
            return Ok(Behavior::ExcludeClient(t));
        }
        Ok(match s {
            "honest" => Behavior::Honest,
            "tamper_output" => Behavior::TamperOutput,
            "nonbit_commitment" => Behavior::NonbitCommitment,
            "morra_misreveal" => Behavior::MorraMisreveal,
            "morra_adaptive" => Behavior::MorraAdaptive,
            "collude_illegal_input" => Behavior::ColludeIllegalInput,
            "silent" => Behavior::Silent,
            _ => return Err(ConfigError::Adversary(format!("unknown behavior `{s}`"))),
        })
    }
}

/// What a correct verifier must conclude about a session with this adversary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expectation {
    Accepted,
    Rejected { stage: Stage, blame: PartyId },
    /// Session accepted with this client excluded.
    ClientExcluded(u64),
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AdversarySpec {
    pub party: PartyId,
    pub behavior: Behavior,
}

impl AdversarySpec {
    pub fn new(party: PartyId, behavior: Behavior) -> Self {
        AdversarySpec { party, behavior }
    }

    /// Checks the behavior makes sense for the role.
    pub fn validate(&self) -> Result<(), ConfigError> {
        use Behavior::*;
        let ok = match (self.party, self.behavior) {
            (_, Honest) => true,
            (PartyId::Prover(_), TamperOutput | NonbitCommitment | ExcludeClient(_)) => true,
            (PartyId::Prover(_) | PartyId::Verifier, MorraMisreveal | MorraAdaptive | Silent) => true,
            (PartyId::Client(_), ColludeIllegalInput) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(ConfigError::Adversary(format!(
                "{} cannot behave as {}",
                self.party, self.behavior
            )))
        }
    }

    pub fn expectation(&self) -> Expectation {
        use Behavior::*;
        match self.behavior {
            Honest | MorraAdaptive => Expectation::Accepted,
            TamperOutput | ExcludeClient(_) => Expectation::Rejected {
                stage: Stage::Output,
                blame: self.party,
            },
            NonbitCommitment => Expectation::Rejected {
                stage: Stage::BitCommit,
                blame: self.party,
            },
            MorraMisreveal | Silent => Expectation::Rejected {
                stage: Stage::Morra,
                blame: self.party,
            },
            ColludeIllegalInput => match self.party {
                PartyId::Client(i) => Expectation::ClientExcluded(i),
                _ => Expectation::Accepted,
            },
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.party, self.behavior)
    }
}

impl FromStr for AdversarySpec {
    type Err = ConfigError;

    /// `party:behavior`, e.g. `prover1:tamper_output` or
    /// `prover2:exclude_client(3)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (party, behavior) = s
            .split_once(':')
            .ok_or_else(|| ConfigError::Adversary(format!("expected party:behavior, got `{s}`")))?;
        let party = party
            .parse::<PartyId>()
            .map_err(|e| ConfigError::Adversary(e.to_string()))?;
        let spec = AdversarySpec {
            party,
            behavior: behavior.parse()?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Morra participant following `behavior`.
pub fn morra_party<G: PrimeGroup>(party: PartyId, behavior: Behavior) -> Box<dyn MorraContributor<G>> {
    match behavior {
        Behavior::MorraMisreveal => Box::new(Misrevealer(HonestContributor::new(party))),
        Behavior::MorraAdaptive => Box::new(AdaptiveContributor::new(party)),
        Behavior::Silent => Box::new(SilentContributor(HonestContributor::new(party))),
        _ => Box::new(HonestContributor::new(party)),
    }
}

/// Opens the first coin of the first batch to a different value.
pub struct Misrevealer<G: PrimeGroup>(pub HonestContributor<G>);

impl<G: PrimeGroup> MorraContributor<G> for Misrevealer<G> {
    fn party(&self) -> PartyId {
        self.0.party()
    }

    fn commit(
        &mut self,
        pp: &PublicParams<G>,
        shape: &[usize],
        earlier: &[MorraCommit<G>],
        rng: &mut dyn RngCore,
    ) -> Option<MorraCommit<G>> {
        self.0.commit(pp, shape, earlier, rng)
    }

    fn reveal(&mut self, pp: &PublicParams<G>, revealed: &[MorraReveal<G>]) -> Option<MorraReveal<G>> {
        let mut msg = self.0.reveal(pp, revealed)?;
        if let Some(v) = msg.values.first_mut().and_then(|b| b.first_mut()) {
            *v = *v + G::Scalar::one();
        }
        Some(msg)
    }
}

/// Commits, then stays silent.
pub struct SilentContributor<G: PrimeGroup>(pub HonestContributor<G>);

impl<G: PrimeGroup> MorraContributor<G> for SilentContributor<G> {
    fn party(&self) -> PartyId {
        self.0.party()
    }

    fn commit(
        &mut self,
        pp: &PublicParams<G>,
        shape: &[usize],
        earlier: &[MorraCommit<G>],
        rng: &mut dyn RngCore,
    ) -> Option<MorraCommit<G>> {
        self.0.commit(pp, shape, earlier, rng)
    }

    fn reveal(&mut self, _: &PublicParams<G>, _: &[MorraReveal<G>]) -> Option<MorraReveal<G>> {
        None
    }
}

/// Chooses each coin value after seeing everyone else's commitments, as a
/// hash of the other commitments to the same coin. Hiding leaves it nothing
/// useful to condition on.
pub struct AdaptiveContributor<G: PrimeGroup> {
    party: PartyId,
    secret: Option<MorraContribution<G>>,
}

impl<G: PrimeGroup> AdaptiveContributor<G> {
    pub fn new(party: PartyId) -> Self {
        AdaptiveContributor { party, secret: None }
    }
}

impl<G: PrimeGroup> MorraContributor<G> for AdaptiveContributor<G> {
    fn party(&self) -> PartyId {
        self.party
    }

    fn commit(
        &mut self,
        pp: &PublicParams<G>,
        shape: &[usize],
        earlier: &[MorraCommit<G>],
        rng: &mut dyn RngCore,
    ) -> Option<MorraCommit<G>> {
        let mut values = Vec::with_capacity(shape.len());
        let mut randomness = Vec::with_capacity(shape.len());
        for (batch, &n) in shape.iter().enumerate() {
            let mut vs = Vec::with_capacity(n);
            let mut rs = Vec::with_capacity(n);
            for j in 0..n {
                let mut w = Writer::new();
                for c in earlier {
                    w.element::<G>(c.commitments[batch][j].point());
                }
                let guess = hash_to_scalar::<G>(b"adaptive-morra", w.as_slice());
                vs.push(-guess);
                rs.push(G::Scalar::random(rng));
            }
            values.push(vs);
            randomness.push(rs);
        }
        let secret = MorraContribution {
            party: self.party,
            values,
            randomness,
        };
        let msg = secret.commit_message(pp);
        self.secret = Some(secret);
        Some(msg)
    }

    fn reveal(&mut self, _: &PublicParams<G>, _: &[MorraReveal<G>]) -> Option<MorraReveal<G>> {
        self.secret.as_ref().map(|s| s.reveal_message())
    }
}
