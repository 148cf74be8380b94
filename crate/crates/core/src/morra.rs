//! Commit-reveal coin flipping among several parties.
//!
//! Every participant commits to uniform scalars, then the commitments are
//! opened in the reverse of the order in which they arrived. Each coin is
//! the threshold bit of the sum of all contributions: `0` iff
//! `X <= ceil(q/2)`. Coins are batched: one commit message carries one
//! commitment per coin of every batch, and one reveal message opens them all.

use std::collections::HashSet;

use rand::RngCore;

use crate::group::{Commitment, PrimeGroup, PublicParams, ScalarField};
use crate::party::PartyId;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MorraFault {
    #[error("opening {batch}/{index} does not match the commitment")]
    BadOpening { batch: usize, index: usize },
    #[error("message shape does not match the round")]
    WrongShape,
    #[error("not a participant of this round")]
    UnknownParty,
    #[error("committed twice")]
    DuplicateCommit,
    #[error("revealed before all commitments arrived")]
    EarlyReveal,
    #[error("revealed out of reverse commit order")]
    RevealOutOfOrder,
    #[error("did not respond")]
    Silent,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MorraError {
    #[error("no contributions to combine")]
    Empty,
    #[error("coin flipping aborted, {party} at fault: {fault}")]
    AbortWithBlame { party: PartyId, fault: MorraFault },
}

impl MorraError {
    pub fn blamed(&self) -> Option<PartyId> {
        match self {
            MorraError::AbortWithBlame { party, .. } => Some(*party),
            MorraError::Empty => None,
        }
    }
}

/// `X = Σ m_k mod q`.
pub fn morra_combine<S: ScalarField>(values: &[S]) -> Result<S, MorraError> {
    if values.is_empty() {
        return Err(MorraError::Empty);
    }
    Ok(values.iter().fold(S::zero(), |acc, v| acc + *v))
}

/// `0` iff `X <= ceil(q/2)`, else `1`.
pub fn scalar_to_bit<S: ScalarField>(x: &S) -> u8 {
    if x.at_most_half_order() {
        0
    } else {
        1
    }
}

/// One party's commit message: `commitments[batch][j]`.
pub struct MorraCommit<G: PrimeGroup> {
    pub party: PartyId,
    pub commitments: Vec<Vec<Commitment<G>>>,
}

/// One party's reveal message, shaped like its commit message.
pub struct MorraReveal<G: PrimeGroup> {
    pub party: PartyId,
    pub values: Vec<Vec<G::Scalar>>,
    pub randomness: Vec<Vec<G::Scalar>>,
}

impl<G: PrimeGroup> Clone for MorraCommit<G> {
    fn clone(&self) -> Self {
        MorraCommit {
            party: self.party,
            commitments: self.commitments.clone(),
        }
    }
}

impl<G: PrimeGroup> Clone for MorraReveal<G> {
    fn clone(&self) -> Self {
        MorraReveal {
            party: self.party,
            values: self.values.clone(),
            randomness: self.randomness.clone(),
        }
    }
}

/// Public coins of one batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicCoins {
    pub batch: usize,
    pub bits: Vec<u8>,
}

/// Secret contribution of one party: uniform `m` values with their
/// commitment randomness.
pub struct MorraContribution<G: PrimeGroup> {
    pub party: PartyId,
    pub values: Vec<Vec<G::Scalar>>,
    pub randomness: Vec<Vec<G::Scalar>>,
}

impl<G: PrimeGroup> MorraContribution<G> {
    pub fn sample(party: PartyId, shape: &[usize], rng: &mut dyn RngCore) -> Self {
        let mut draw = || {
            shape
                .iter()
                .map(|&n| (0..n).map(|_| G::Scalar::random(rng)).collect())
                .collect::<Vec<Vec<_>>>()
        };
        let values = draw();
        let randomness = draw();
        MorraContribution {
            party,
            values,
            randomness,
        }
    }

    pub fn commit_message(&self, pp: &PublicParams<G>) -> MorraCommit<G> {
        let commitments = self
            .values
            .iter()
            .zip(&self.randomness)
            .map(|(vs, rs)| vs.iter().zip(rs).map(|(m, r)| pp.commit(m, r)).collect())
            .collect();
        MorraCommit {
            party: self.party,
            commitments,
        }
    }

    pub fn reveal_message(&self) -> MorraReveal<G> {
        MorraReveal {
            party: self.party,
            values: self.values.clone(),
            randomness: self.randomness.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RoundPhase {
    Commit,
    Reveal,
    Done,
    Aborted,
}

/// Verifier-side state of one batched Morra execution.
///
/// Commits may arrive in any order; reveals must arrive in exactly the
/// reverse order. Every reveal is checked against its commitment on arrival.
pub struct MorraRound<G: PrimeGroup> {
    participants: Vec<PartyId>,
    shape: Vec<usize>,
    commits: Vec<MorraCommit<G>>,
    reveals: Vec<MorraReveal<G>>,
    phase: RoundPhase,
}

impl<G: PrimeGroup> std::fmt::Debug for MorraRound<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MorraRound")
            .field("participants", &self.participants)
            .field("shape", &self.shape)
            .field("committed", &self.commit_order())
            .field("revealed", &self.reveal_order())
            .field("phase", &self.phase)
            .finish()
    }
}

impl<G: PrimeGroup> MorraRound<G> {
    pub fn new(participants: Vec<PartyId>, shape: Vec<usize>) -> Self {
        MorraRound {
            participants,
            shape,
            commits: Vec::new(),
            reveals: Vec::new(),
            phase: RoundPhase::Commit,
        }
    }

    pub fn participants(&self) -> &[PartyId] {
        &self.participants
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn commit_order(&self) -> Vec<PartyId> {
        self.commits.iter().map(|c| c.party).collect()
    }

    pub fn reveal_order(&self) -> Vec<PartyId> {
        self.reveals.iter().map(|r| r.party).collect()
    }

    pub fn commits(&self) -> &[MorraCommit<G>] {
        &self.commits
    }

    pub fn reveals(&self) -> &[MorraReveal<G>] {
        &self.reveals
    }

    pub fn all_committed(&self) -> bool {
        self.commits.len() == self.participants.len()
    }

    pub fn is_complete(&self) -> bool {
        self.phase == RoundPhase::Done
    }

    fn abort(&mut self, party: PartyId, fault: MorraFault) -> MorraError {
        self.phase = RoundPhase::Aborted;
        MorraError::AbortWithBlame { party, fault }
    }

    fn shaped<T>(&self, rows: &[Vec<T>]) -> bool {
        rows.len() == self.shape.len() && rows.iter().zip(&self.shape).all(|(r, &n)| r.len() == n)
    }

    pub fn on_commit(&mut self, msg: MorraCommit<G>) -> Result<(), MorraError> {
        if !self.participants.contains(&msg.party) {
            return Err(self.abort(msg.party, MorraFault::UnknownParty));
        }
        if self.commits.iter().any(|c| c.party == msg.party) {
            return Err(self.abort(msg.party, MorraFault::DuplicateCommit));
        }
        if self.phase != RoundPhase::Commit {
            return Err(self.abort(msg.party, MorraFault::DuplicateCommit));
        }
        if !self.shaped(&msg.commitments) {
            return Err(self.abort(msg.party, MorraFault::WrongShape));
        }
        self.commits.push(msg);
        if self.all_committed() {
            self.phase = RoundPhase::Reveal;
        }
        Ok(())
    }

    /// The party whose reveal is due next, if any.
    pub fn next_revealer(&self) -> Option<PartyId> {
        if self.phase != RoundPhase::Reveal {
            return None;
        }
        let idx = self.commits.len().checked_sub(self.reveals.len() + 1)?;
        Some(self.commits[idx].party)
    }

    /// Returns the coins once the last reveal has been checked.
    pub fn on_reveal(
        &mut self,
        pp: &PublicParams<G>,
        msg: MorraReveal<G>,
    ) -> Result<Option<Vec<PublicCoins>>, MorraError> {
        if !self.participants.contains(&msg.party) {
            return Err(self.abort(msg.party, MorraFault::UnknownParty));
        }
        match self.phase {
            RoundPhase::Commit => return Err(self.abort(msg.party, MorraFault::EarlyReveal)),
            RoundPhase::Reveal => {}
            RoundPhase::Done | RoundPhase::Aborted => {
                return Err(self.abort(msg.party, MorraFault::RevealOutOfOrder))
            }
        }
        if self.next_revealer() != Some(msg.party) {
            return Err(self.abort(msg.party, MorraFault::RevealOutOfOrder));
        }
        if !self.shaped(&msg.values) || !self.shaped(&msg.randomness) {
            return Err(self.abort(msg.party, MorraFault::WrongShape));
        }
        let commit = self
            .commits
            .iter()
            .find(|c| c.party == msg.party)
            .expect("revealer committed");
        for (batch, ((cs, ms), rs)) in commit
            .commitments
            .iter()
            .zip(&msg.values)
            .zip(&msg.randomness)
            .enumerate()
        {
            for (index, ((c, m), r)) in cs.iter().zip(ms).zip(rs).enumerate() {
                if !pp.verify_opening(c, m, r) {
                    return Err(self.abort(msg.party, MorraFault::BadOpening { batch, index }));
                }
            }
        }
        self.reveals.push(msg);
        if self.reveals.len() == self.participants.len() {
            self.phase = RoundPhase::Done;
            return Ok(Some(self.coins().expect("round complete")));
        }
        Ok(None)
    }

    /// Abort caused by a party that stopped responding: blames whoever is
    /// due to speak next.
    pub fn abort_silent(&mut self) -> MorraError {
        let culprit = match self.phase {
            RoundPhase::Commit => {
                let seen: HashSet<_> = self.commits.iter().map(|c| c.party).collect();
                self.participants.iter().copied().find(|p| !seen.contains(p))
            }
            RoundPhase::Reveal => self.next_revealer(),
            _ => None,
        };
        let party = culprit.unwrap_or(PartyId::Verifier);
        self.abort(party, MorraFault::Silent)
    }

    /// Coins of every batch, available once all reveals verified.
    pub fn coins(&self) -> Option<Vec<PublicCoins>> {
        if self.reveals.len() != self.participants.len() || self.participants.is_empty() {
            return None;
        }
        let coins = self
            .shape
            .iter()
            .enumerate()
            .map(|(batch, &n)| {
                let bits = (0..n)
                    .map(|j| {
                        let contributions: Vec<G::Scalar> =
                            self.reveals.iter().map(|r| r.values[batch][j]).collect();
                        scalar_to_bit(&morra_combine(&contributions).expect("non-empty"))
                    })
                    .collect();
                PublicCoins { batch, bits }
            })
            .collect();
        Some(coins)
    }
}

/// A participant in [`run_morra`]. Returning `None` models a party that
/// stops responding.
pub trait MorraContributor<G: PrimeGroup> {
    fn party(&self) -> PartyId;

    /// Produces the commit message; `earlier` holds the commitments that
    /// arrived before this party's turn.
    fn commit(
        &mut self,
        pp: &PublicParams<G>,
        shape: &[usize],
        earlier: &[MorraCommit<G>],
        rng: &mut dyn RngCore,
    ) -> Option<MorraCommit<G>>;

    fn reveal(&mut self, pp: &PublicParams<G>, revealed: &[MorraReveal<G>]) -> Option<MorraReveal<G>>;
}

/// Follows the protocol.
pub struct HonestContributor<G: PrimeGroup> {
    party: PartyId,
    secret: Option<MorraContribution<G>>,
}

impl<G: PrimeGroup> HonestContributor<G> {
    pub fn new(party: PartyId) -> Self {
        HonestContributor { party, secret: None }
    }
}

impl<G: PrimeGroup> MorraContributor<G> for HonestContributor<G> {
    fn party(&self) -> PartyId {
        self.party
    }

    fn commit(
        &mut self,
        pp: &PublicParams<G>,
        shape: &[usize],
        _earlier: &[MorraCommit<G>],
        rng: &mut dyn RngCore,
    ) -> Option<MorraCommit<G>> {
        let secret = MorraContribution::sample(self.party, shape, rng);
        let msg = secret.commit_message(pp);
        self.secret = Some(secret);
        Some(msg)
    }

    fn reveal(&mut self, _pp: &PublicParams<G>, _revealed: &[MorraReveal<G>]) -> Option<MorraReveal<G>> {
        self.secret.as_ref().map(|s| s.reveal_message())
    }
}

/// Drives a full batched execution: commits in slice order, reveals in
/// reverse. Returns the coins and the completed round (its transcript).
pub fn run_morra<G: PrimeGroup>(
    pp: &PublicParams<G>,
    parties: &mut [&mut dyn MorraContributor<G>],
    shape: &[usize],
    rng: &mut dyn RngCore,
) -> Result<(Vec<PublicCoins>, MorraRound<G>), MorraError> {
    let mut round = MorraRound::new(parties.iter().map(|p| p.party()).collect(), shape.to_vec());
    for p in parties.iter_mut() {
        match p.commit(pp, shape, round.commits(), rng) {
            Some(msg) => round.on_commit(msg)?,
            None => return Err(round.abort_silent()),
        }
    }
    for p in parties.iter_mut().rev() {
        match p.reveal(pp, round.reveals()) {
            Some(msg) => {
                if let Some(coins) = round.on_reveal(pp, msg)? {
                    return Ok((coins, round));
                }
            }
            None => return Err(round.abort_silent()),
        }
    }
    Err(round.abort_silent())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{ModQScalar, Q101, ToyGroup61, ToyQ101};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type S101 = ModQScalar<Q101>;

    #[test]
    fn combine_examples() {
        assert_eq!(morra_combine(&[S101::zero(), S101::zero()]), Ok(S101::zero()));
        assert_eq!(morra_combine(&[S101::new(100), S101::new(1)]), Ok(S101::zero()));
        assert_eq!(morra_combine::<S101>(&[]), Err(MorraError::Empty));
    }

    #[test]
    fn threshold_counts_on_q101() {
        assert_eq!(scalar_to_bit(&S101::new(0)), 0);
        assert_eq!(scalar_to_bit(&S101::new(100)), 1);
        let zeros = (0..101).filter(|&v| scalar_to_bit(&S101::new(v)) == 0).count();
        assert_eq!((zeros, 101 - zeros), (52, 49));
    }

    struct Misrevealer(HonestContributor<ToyGroup61>);

    impl MorraContributor<ToyGroup61> for Misrevealer {
        fn party(&self) -> PartyId {
            self.0.party()
        }
        fn commit(
            &mut self,
            pp: &PublicParams<ToyGroup61>,
            shape: &[usize],
            earlier: &[MorraCommit<ToyGroup61>],
            rng: &mut dyn RngCore,
        ) -> Option<MorraCommit<ToyGroup61>> {
            self.0.commit(pp, shape, earlier, rng)
        }
        fn reveal(
            &mut self,
            pp: &PublicParams<ToyGroup61>,
            revealed: &[MorraReveal<ToyGroup61>],
        ) -> Option<MorraReveal<ToyGroup61>> {
            let mut msg = self.0.reveal(pp, revealed)?;
            msg.values[0][3] = msg.values[0][3] + ScalarField::one();
            Some(msg)
        }
    }

    struct Silent(PartyId);

    impl MorraContributor<ToyGroup61> for Silent {
        fn party(&self) -> PartyId {
            self.0
        }
        fn commit(
            &mut self,
            pp: &PublicParams<ToyGroup61>,
            shape: &[usize],
            _: &[MorraCommit<ToyGroup61>],
            rng: &mut dyn RngCore,
        ) -> Option<MorraCommit<ToyGroup61>> {
            Some(MorraContribution::sample(self.0, shape, rng).commit_message(pp))
        }
        fn reveal(
            &mut self,
            _: &PublicParams<ToyGroup61>,
            _: &[MorraReveal<ToyGroup61>],
        ) -> Option<MorraReveal<ToyGroup61>> {
            None
        }
    }

    #[test]
    fn honest_run_produces_coins_and_reverse_reveals() {
        let pp = PublicParams::<ToyGroup61>::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut a = HonestContributor::new(PartyId::Prover(1));
        let mut b = HonestContributor::new(PartyId::Prover(2));
        let mut v = HonestContributor::new(PartyId::Verifier);
        let (coins, round) = run_morra(&pp, &mut [&mut a, &mut b, &mut v], &[64, 3], &mut rng).unwrap();
        assert_eq!(coins.len(), 2);
        assert_eq!(coins[0].bits.len(), 64);
        assert!(coins[0].bits.iter().all(|&b| b <= 1));
        let mut rev = round.commit_order();
        rev.reverse();
        assert_eq!(round.reveal_order(), rev);
        assert_eq!(round.coins(), Some(coins));
    }

    #[test]
    fn misreveal_blames_the_cheater() {
        let pp = PublicParams::<ToyGroup61>::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut a = HonestContributor::new(PartyId::Prover(1));
        let mut cheat = Misrevealer(HonestContributor::new(PartyId::Prover(2)));
        let mut v = HonestContributor::new(PartyId::Verifier);
        let err = run_morra(&pp, &mut [&mut a, &mut cheat, &mut v], &[8], &mut rng).unwrap_err();
        assert_eq!(
            err,
            MorraError::AbortWithBlame {
                party: PartyId::Prover(2),
                fault: MorraFault::BadOpening { batch: 0, index: 3 }
            }
        );
    }

    #[test]
    fn silent_party_is_blamed() {
        let pp = PublicParams::<ToyGroup61>::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut a = HonestContributor::new(PartyId::Prover(1));
        let mut s = Silent(PartyId::Verifier);
        let err = run_morra(&pp, &mut [&mut a, &mut s], &[4], &mut rng).unwrap_err();
        assert_eq!(err.blamed(), Some(PartyId::Verifier));
    }

    #[test]
    fn round_rejects_wrong_reveal_order_and_early_reveals() {
        let pp = PublicParams::<ToyQ101>::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let parties = [PartyId::Prover(1), PartyId::Verifier];
        let secrets: Vec<_> = parties
            .iter()
            .map(|&p| MorraContribution::<ToyQ101>::sample(p, &[4], &mut rng))
            .collect();

        let mut round = MorraRound::new(parties.to_vec(), vec![4]);
        round.on_commit(secrets[0].commit_message(&pp)).unwrap();
        let err = round.on_reveal(&pp, secrets[0].reveal_message()).unwrap_err();
        assert_eq!(err.blamed(), Some(PartyId::Prover(1)));

        let mut round = MorraRound::new(parties.to_vec(), vec![4]);
        round.on_commit(secrets[0].commit_message(&pp)).unwrap();
        round.on_commit(secrets[1].commit_message(&pp)).unwrap();
        // prover-1 committed first so it must reveal last.
        let err = round.on_reveal(&pp, secrets[0].reveal_message()).unwrap_err();
        assert_eq!(
            err,
            MorraError::AbortWithBlame {
                party: PartyId::Prover(1),
                fault: MorraFault::RevealOutOfOrder
            }
        );

        let mut round = MorraRound::new(parties.to_vec(), vec![4]);
        round.on_commit(secrets[0].commit_message(&pp)).unwrap();
        assert!(round.on_commit(secrets[0].commit_message(&pp)).is_err());

        let mut round = MorraRound::<ToyQ101>::new(parties.to_vec(), vec![4]);
        let mut wrong = secrets[0].commit_message(&pp);
        wrong.commitments[0].pop();
        assert!(round.on_commit(wrong).is_err());
    }
}
