//! The noisy-sum protocol: provers add verifiably sampled binomial noise to
//! their share sums, and a public verifier checks every step.
//!
//! Per prover `k` and bin, the prover commits to `n_b` private bits `v_j`
//! with bit proofs. A Morra batch then yields public bits `b_j`, and the
//! prover flips `v_j` wherever `b_j = 1`. The verifier mirrors the flip on
//! the commitments (`ĉ' = Com(1, 0)·c'^-1`) and checks
//! `∏_i c_{i,k} · ∏_j ĉ'_j = Com(y_k, z_k)`.
//!
//! [`Verifier`] is the only judge of a session: the live verifier and an
//! offline auditor feed it the same ordered message stream.

use std::fmt;

use rand::Rng;

use crate::dp_params::{debiased_estimate, PrivacyParams};
use crate::encoding::{DecodeError, Reader, Writer};
use crate::group::{Commitment, PrimeGroup, PublicParams, ScalarField};
use crate::morra::{MorraCommit, MorraReveal, MorraRound, PublicCoins};
use crate::party::PartyId;
use crate::shares::{verify_client_submission, ClientBroadcast, ClientVerdict, ProverPayload, RejectReason};
use crate::sigma_or::{prove_bit_forced, verify_bit, verify_bits_batch, Branch, OrProof, ProofContext};

/// Public session parameters every party agrees on up front.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SessionSetup {
    #[serde(with = "hex_bytes")]
    pub session_id: Vec<u8>,
    pub provers: u32,
    pub bins: u32,
    pub privacy: PrivacyParams,
}

mod hex_bytes {
    pub fn serialize<S: serde::Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }
    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s: String = serde::Deserialize::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

impl SessionSetup {
    pub fn coins(&self) -> u64 {
        self.privacy.coins
    }

    /// Morra batch holding prover `k`'s coins for `bin`.
    pub fn coin_batch(&self, k: u32, bin: u32) -> usize {
        (k as usize - 1) * self.bins as usize + bin as usize
    }

    /// Morra participants in commit order: provers, then the verifier.
    pub fn morra_participants(&self) -> Vec<PartyId> {
        (1..=self.provers)
            .map(PartyId::Prover)
            .chain(std::iter::once(PartyId::Verifier))
            .collect()
    }

    pub fn morra_shape(&self) -> Vec<usize> {
        vec![self.coins() as usize; self.provers as usize * self.bins as usize]
    }
}

/// Context for prover `k`'s proof on bit `j` of `bin`.
pub fn bit_context(setup: &SessionSetup, k: u32, bin: u32, j: u64) -> ProofContext {
    ProofContext::new(
        &setup.session_id,
        PartyId::Prover(k).label(),
        bin as u64 * setup.coins() + j,
    )
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("operation not allowed in the current phase")]
    Phase,
    #[error("expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("no output from {0}")]
    MissingOutput(PartyId),
    #[error("noisy sum does not lift unambiguously")]
    Lift,
}

// ---------------------------------------------------------------------------
// Messages

pub struct BitCommitMessage<G: PrimeGroup> {
    pub prover: u32,
    /// `commitments[bin][j]`
    pub commitments: Vec<Vec<Commitment<G>>>,
    pub proofs: Vec<Vec<OrProof<G>>>,
}

impl<G: PrimeGroup> Clone for BitCommitMessage<G> {
    fn clone(&self) -> Self {
        BitCommitMessage {
            prover: self.prover,
            commitments: self.commitments.clone(),
            proofs: self.proofs.clone(),
        }
    }
}

/// `(y_k, z_k)` per bin.
pub struct ProverOutput<G: PrimeGroup> {
    pub prover: u32,
    pub y: Vec<G::Scalar>,
    pub z: Vec<G::Scalar>,
}

impl<G: PrimeGroup> Clone for ProverOutput<G> {
    fn clone(&self) -> Self {
        ProverOutput {
            prover: self.prover,
            y: self.y.clone(),
            z: self.z.clone(),
        }
    }
}

/// Phase tag of a broadcast message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Client,
    BitCommit,
    MorraCommit,
    MorraReveal,
    Output,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Client => "CLIENT",
            Phase::BitCommit => "BIT_COMMIT",
            Phase::MorraCommit => "MORRA_COMMIT",
            Phase::MorraReveal => "MORRA_REVEAL",
            Phase::Output => "OUTPUT",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub enum Message<G: PrimeGroup> {
    Client(ClientBroadcast<G>),
    BitCommit(BitCommitMessage<G>),
    MorraCommit(MorraCommit<G>),
    MorraReveal(MorraReveal<G>),
    Output(ProverOutput<G>),
}

impl<G: PrimeGroup> Clone for Message<G> {
    fn clone(&self) -> Self {
        match self {
            Message::Client(m) => Message::Client(m.clone()),
            Message::BitCommit(m) => Message::BitCommit(m.clone()),
            Message::MorraCommit(m) => Message::MorraCommit(m.clone()),
            Message::MorraReveal(m) => Message::MorraReveal(m.clone()),
            Message::Output(m) => Message::Output(m.clone()),
        }
    }
}

fn read_vec<T>(
    r: &mut Reader<'_>,
    item_len: usize,
    mut f: impl FnMut(&mut Reader<'_>) -> Result<T, DecodeError>,
) -> Result<Vec<T>, DecodeError> {
    let n = r.u32()? as usize;
    if n.saturating_mul(item_len) > r.remaining() {
        return Err(DecodeError::Truncated);
    }
    (0..n).map(|_| f(r)).collect()
}

impl<G: PrimeGroup> Message<G> {
    pub fn phase(&self) -> Phase {
        match self {
            Message::Client(_) => Phase::Client,
            Message::BitCommit(_) => Phase::BitCommit,
            Message::MorraCommit(_) => Phase::MorraCommit,
            Message::MorraReveal(_) => Phase::MorraReveal,
            Message::Output(_) => Phase::Output,
        }
    }

    pub fn sender(&self) -> PartyId {
        match self {
            Message::Client(m) => PartyId::Client(m.client_id),
            Message::BitCommit(m) => PartyId::Prover(m.prover),
            Message::MorraCommit(m) => m.party,
            Message::MorraReveal(m) => m.party,
            Message::Output(m) => PartyId::Prover(m.prover),
        }
    }

    /// Canonical body bytes. Nested sequences carry a `u32` length prefix.
    pub fn encode_body(&self) -> Vec<u8> {
        let mut w = Writer::new();
        match self {
            Message::Client(m) => m.write(&mut w),
            Message::BitCommit(m) => {
                w.u32(m.prover).u32(m.commitments.len() as u32);
                for (cs, ps) in m.commitments.iter().zip(&m.proofs) {
                    w.u32(cs.len() as u32);
                    for c in cs {
                        w.element::<G>(c.point());
                    }
                    w.u32(ps.len() as u32);
                    for p in ps {
                        p.write(&mut w);
                    }
                }
            }
            Message::MorraCommit(m) => {
                m.party.write(&mut w);
                w.u32(m.commitments.len() as u32);
                for cs in &m.commitments {
                    w.u32(cs.len() as u32);
                    for c in cs {
                        w.element::<G>(c.point());
                    }
                }
            }
            Message::MorraReveal(m) => {
                m.party.write(&mut w);
                w.u32(m.values.len() as u32);
                for (vs, rs) in m.values.iter().zip(&m.randomness) {
                    w.u32(vs.len() as u32);
                    for v in vs {
                        w.scalar::<G>(v);
                    }
                    w.u32(rs.len() as u32);
                    for r in rs {
                        w.scalar::<G>(r);
                    }
                }
            }
            Message::Output(m) => {
                w.u32(m.prover).u32(m.y.len() as u32);
                for (y, z) in m.y.iter().zip(&m.z) {
                    w.scalar::<G>(y).scalar::<G>(z);
                }
            }
        }
        w.finish()
    }

    pub fn decode_body(phase: Phase, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let el = G::ELEMENT_LEN;
        let sl = <G::Scalar as ScalarField>::ENCODED_LEN;
        let msg = match phase {
            Phase::Client => Message::Client(ClientBroadcast::read(&mut r)?),
            Phase::BitCommit => {
                let prover = r.u32()?;
                if prover == 0 {
                    return Err(DecodeError::Invalid("prover index"));
                }
                let mut commitments = Vec::new();
                let mut proofs = Vec::new();
                let bins = r.u32()? as usize;
                if bins.saturating_mul(8) > r.remaining() {
                    return Err(DecodeError::Truncated);
                }
                for _ in 0..bins {
                    commitments.push(read_vec(&mut r, el, |r| r.element::<G>().map(Commitment))?);
                    proofs.push(read_vec(&mut r, OrProof::<G>::ENCODED_LEN, OrProof::read)?);
                }
                Message::BitCommit(BitCommitMessage {
                    prover,
                    commitments,
                    proofs,
                })
            }
            Phase::MorraCommit => {
                let party = PartyId::read(&mut r)?;
                let commitments = read_vec(&mut r, 4, |r| {
                    read_vec(r, el, |r| r.element::<G>().map(Commitment))
                })?;
                Message::MorraCommit(MorraCommit { party, commitments })
            }
            Phase::MorraReveal => {
                let party = PartyId::read(&mut r)?;
                let batches = r.u32()? as usize;
                if batches.saturating_mul(8) > r.remaining() {
                    return Err(DecodeError::Truncated);
                }
                let mut values = Vec::with_capacity(batches);
                let mut randomness = Vec::with_capacity(batches);
                for _ in 0..batches {
                    values.push(read_vec(&mut r, sl, |r| r.scalar::<G>())?);
                    randomness.push(read_vec(&mut r, sl, |r| r.scalar::<G>())?);
                }
                Message::MorraReveal(MorraReveal {
                    party,
                    values,
                    randomness,
                })
            }
            Phase::Output => {
                let prover = r.u32()?;
                if prover == 0 {
                    return Err(DecodeError::Invalid("prover index"));
                }
                let pairs = read_vec(&mut r, 2 * sl, |r| Ok((r.scalar::<G>()?, r.scalar::<G>()?)))?;
                let (y, z) = pairs.into_iter().unzip();
                Message::Output(ProverOutput { prover, y, z })
            }
        };
        r.finish()?;
        Ok(msg)
    }
}

// ---------------------------------------------------------------------------
// Prover

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ProverPhase {
    AwaitingCoins,
    Done,
}

/// One prover's private state. The bits `v` and their randomness `s` never
/// leave this struct.
pub struct ProverState<G: PrimeGroup> {
    prover: u32,
    coins: usize,
    share_sums: Vec<G::Scalar>,
    rand_sums: Vec<G::Scalar>,
    bits: Vec<Vec<G::Scalar>>,
    bit_rand: Vec<Vec<G::Scalar>>,
    phase: ProverPhase,
}

impl<G: PrimeGroup> ProverState<G> {
    pub fn prover(&self) -> u32 {
        self.prover
    }

    /// The private bits and their commitment randomness, per bin. Only for
    /// tests that scan a transcript for leaked openings.
    pub fn secret_openings(&self) -> (&[Vec<G::Scalar>], &[Vec<G::Scalar>]) {
        (&self.bits, &self.bit_rand)
    }
}

/// Samples `n_b` private bits per bin, commits to them and proves each is a
/// bit. `payloads` are the private shares of the accepted clients.
pub fn prover_init<G: PrimeGroup, R: Rng + ?Sized>(
    pp: &PublicParams<G>,
    setup: &SessionSetup,
    prover: u32,
    payloads: &[&ProverPayload<G>],
    rng: &mut R,
) -> Result<(ProverState<G>, BitCommitMessage<G>), ProtocolError> {
    let bits = (0..setup.bins)
        .map(|_| {
            (0..setup.coins())
                .map(|_| G::Scalar::from_u64(rng.random_range(0..2)))
                .collect()
        })
        .collect();
    prover_init_with_bits(pp, setup, prover, payloads, bits, rng)
}

/// [`prover_init`] with caller-chosen noise values, which need not be bits.
/// Each proof is answered through the branch matching `v == 0`, so non-bit
/// values yield proofs that fail verification.
pub fn prover_init_with_bits<G: PrimeGroup, R: Rng + ?Sized>(
    pp: &PublicParams<G>,
    setup: &SessionSetup,
    prover: u32,
    payloads: &[&ProverPayload<G>],
    bits: Vec<Vec<G::Scalar>>,
    rng: &mut R,
) -> Result<(ProverState<G>, BitCommitMessage<G>), ProtocolError> {
    let bins = setup.bins as usize;
    let coins = setup.coins() as usize;
    if bits.len() != bins {
        return Err(ProtocolError::Shape {
            expected: bins,
            got: bits.len(),
        });
    }
    if let Some(row) = bits.iter().find(|row| row.len() != coins) {
        return Err(ProtocolError::Shape {
            expected: coins,
            got: row.len(),
        });
    }
    let mut share_sums = vec![G::Scalar::zero(); bins];
    let mut rand_sums = vec![G::Scalar::zero(); bins];
    for p in payloads {
        if p.shares.len() != bins || p.randomness.len() != bins {
            return Err(ProtocolError::Shape {
                expected: bins,
                got: p.shares.len(),
            });
        }
        for b in 0..bins {
            share_sums[b] = share_sums[b] + p.shares[b];
            rand_sums[b] = rand_sums[b] + p.randomness[b];
        }
    }

    let mut bit_rand = Vec::with_capacity(bins);
    let mut commitments = Vec::with_capacity(bins);
    let mut proofs = Vec::with_capacity(bins);
    for (bin, row) in bits.iter().enumerate() {
        let mut rs = Vec::with_capacity(coins);
        let mut cs = Vec::with_capacity(coins);
        let mut ps = Vec::with_capacity(coins);
        for (j, v) in row.iter().enumerate() {
            let s = G::Scalar::random(rng);
            let c = pp.commit(v, &s);
            let branch = if v.is_zero() { Branch::Zero } else { Branch::One };
            let ctx = bit_context(setup, prover, bin as u32, j as u64);
            ps.push(prove_bit_forced(pp, branch, &s, &c, &ctx, rng));
            cs.push(c);
            rs.push(s);
        }
        bit_rand.push(rs);
        commitments.push(cs);
        proofs.push(ps);
    }

    let state = ProverState {
        prover,
        coins,
        share_sums,
        rand_sums,
        bits,
        bit_rand,
        phase: ProverPhase::AwaitingCoins,
    };
    let msg = BitCommitMessage {
        prover,
        commitments,
        proofs,
    };
    Ok((state, msg))
}

/// `v̂ = v` if `b = 0`, else `1 - v`.
pub fn linearized_xor<S: ScalarField>(v: &S, b: u8) -> S {
    if b == 0 {
        *v
    } else {
        S::one() - *v
    }
}

impl<G: PrimeGroup> ProverState<G> {
    /// Applies the public coins (one [`PublicCoins`] per bin) and returns
    /// `y_k = Σ shares + Σ v̂_j` and `z_k = Σ r + Σ σ_j s_j` with
    /// `σ_j = -1` where `b_j = 1`.
    pub fn adjust_and_output(&mut self, coins: &[&PublicCoins]) -> Result<ProverOutput<G>, ProtocolError> {
        if self.phase != ProverPhase::AwaitingCoins {
            return Err(ProtocolError::Phase);
        }
        if coins.len() != self.bits.len() {
            return Err(ProtocolError::Shape {
                expected: self.bits.len(),
                got: coins.len(),
            });
        }
        if let Some(c) = coins.iter().find(|c| c.bits.len() != self.coins) {
            return Err(ProtocolError::Shape {
                expected: self.coins,
                got: c.bits.len(),
            });
        }
        let mut y = Vec::with_capacity(self.bits.len());
        let mut z = Vec::with_capacity(self.bits.len());
        for (bin, pc) in coins.iter().enumerate() {
            let mut yb = self.share_sums[bin];
            let mut zb = self.rand_sums[bin];
            for ((v, s), &b) in self.bits[bin].iter().zip(&self.bit_rand[bin]).zip(&pc.bits) {
                yb = yb + linearized_xor(v, b);
                zb = if b == 0 { zb + *s } else { zb - *s };
            }
            y.push(yb);
            z.push(zb);
        }
        self.phase = ProverPhase::Done;
        Ok(ProverOutput {
            prover: self.prover,
            y,
            z,
        })
    }
}

// ---------------------------------------------------------------------------
// Verifier-side checks

/// `ĉ' = Com(1, 0)·c'^-1` if `b = 1`, else `c'`.
pub fn verifier_update_commitments<G: PrimeGroup>(
    pp: &PublicParams<G>,
    c: &Commitment<G>,
    b: u8,
) -> Commitment<G> {
    if b == 0 {
        *c
    } else {
        pp.one_minus(c)
    }
}

/// `∏_i c_{i,k} · ∏_j ĉ'_j == Com(y_k, z_k)`, with the client product
/// precomputed.
pub fn verifier_check_prover<G: PrimeGroup>(
    pp: &PublicParams<G>,
    client_product: &Commitment<G>,
    updated: &[Commitment<G>],
    y: &G::Scalar,
    z: &G::Scalar,
) -> bool {
    client_product.combine(&Commitment::product(updated)) == pp.commit(y, z)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Aggregate<S> {
    pub bin: u32,
    pub y: S,
    pub estimate: i64,
}

/// `y = Σ_k y_k` per bin and its centered estimate. Any missing prover
/// output means nothing is released.
pub fn aggregate<G: PrimeGroup>(
    outputs: &[Option<ProverOutput<G>>],
    setup: &SessionSetup,
) -> Result<Vec<Aggregate<G::Scalar>>, ProtocolError> {
    if outputs.len() != setup.provers as usize {
        return Err(ProtocolError::Shape {
            expected: setup.provers as usize,
            got: outputs.len(),
        });
    }
    let mut sums = vec![G::Scalar::zero(); setup.bins as usize];
    for (k, out) in outputs.iter().enumerate() {
        let out = out
            .as_ref()
            .ok_or(ProtocolError::MissingOutput(PartyId::Prover(k as u32 + 1)))?;
        if out.y.len() != sums.len() {
            return Err(ProtocolError::Shape {
                expected: sums.len(),
                got: out.y.len(),
            });
        }
        for (s, y) in sums.iter_mut().zip(&out.y) {
            *s = *s + *y;
        }
    }
    sums.into_iter()
        .enumerate()
        .map(|(bin, y)| {
            let estimate = debiased_estimate::<G>(&y, setup.provers as u64, setup.coins())
                .map_err(|_| ProtocolError::Lift)?;
            Ok(Aggregate {
                bin: bin as u32,
                y,
                estimate,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Session judge

/// Stage at which a session was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Clients,
    BitCommit,
    Morra,
    Output,
    Aggregate,
    /// The published record disagrees with the recomputed one.
    Record,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Clients => "clients",
            Stage::BitCommit => "bit_commit",
            Stage::Morra => "morra",
            Stage::Output => "output",
            Stage::Aggregate => "aggregate",
            Stage::Record => "record",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Rejection {
    pub stage: Stage,
    pub blame: PartyId,
    pub detail: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rejected at {} stage, blame {}: {}", self.stage, self.blame, self.detail)
    }
}

impl std::error::Error for Rejection {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SessionOutcome<S> {
    Accepted {
        aggregates: Vec<Aggregate<S>>,
        excluded_clients: Vec<u64>,
    },
    Rejected(Rejection),
}

impl<S> SessionOutcome<S> {
    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            SessionOutcome::Rejected(r) => Some(r),
            SessionOutcome::Accepted { .. } => None,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, SessionOutcome::Accepted { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum JudgePhase {
    Clients,
    BitCommits,
    Morra,
    Outputs,
    Done,
}

/// Consumes the ordered broadcast of one session and decides it.
///
/// Clients that fail validation are excluded and recorded; any failing
/// prover or Morra check aborts the session with blame.
pub struct Verifier<G: PrimeGroup> {
    pp: PublicParams<G>,
    setup: SessionSetup,
    batch_verify: bool,
    phase: JudgePhase,
    failure: Option<Rejection>,
    verdicts: Vec<(u64, ClientVerdict)>,
    /// Running `∏_i c_{i,k}` over accepted clients, `[k][bin]`.
    client_products: Vec<Vec<Commitment<G>>>,
    bit_commits: Vec<Option<Vec<Vec<Commitment<G>>>>>,
    morra: MorraRound<G>,
    coins: Option<Vec<PublicCoins>>,
    outputs: Vec<Option<ProverOutput<G>>>,
}

impl<G: PrimeGroup> Verifier<G> {
    pub fn new(pp: PublicParams<G>, setup: SessionSetup) -> Self {
        let k = setup.provers as usize;
        let bins = setup.bins as usize;
        let morra = MorraRound::new(setup.morra_participants(), setup.morra_shape());
        Verifier {
            pp,
            batch_verify: false,
            phase: JudgePhase::Clients,
            failure: None,
            verdicts: Vec::new(),
            client_products: vec![vec![Commitment::identity(); bins]; k],
            bit_commits: vec![None; k],
            morra,
            coins: None,
            outputs: vec![None; k],
            setup,
        }
    }

    /// Verifies bit proofs with one multi-exponentiation per prover.
    pub fn with_batch_verification(mut self, on: bool) -> Self {
        self.batch_verify = on;
        self
    }

    pub fn setup(&self) -> &SessionSetup {
        &self.setup
    }

    pub fn params(&self) -> &PublicParams<G> {
        &self.pp
    }

    pub fn client_verdicts(&self) -> &[(u64, ClientVerdict)] {
        &self.verdicts
    }

    pub fn morra_round(&self) -> &MorraRound<G> {
        &self.morra
    }

    /// Public coins once Morra completed.
    pub fn coins(&self) -> Option<&[PublicCoins]> {
        self.coins.as_deref()
    }

    /// Coins for prover `k`, one entry per bin.
    pub fn coins_for(&self, k: u32) -> Option<Vec<&PublicCoins>> {
        let coins = self.coins.as_ref()?;
        Some(
            (0..self.setup.bins)
                .map(|bin| &coins[self.setup.coin_batch(k, bin)])
                .collect(),
        )
    }

    pub fn failure(&self) -> Option<&Rejection> {
        self.failure.as_ref()
    }

    /// Records a client as excluded without looking at its broadcast, e.g.
    /// because the broadcast could not be decoded.
    pub fn exclude_client(&mut self, id: u64, reason: RejectReason) {
        self.verdicts.push((id, ClientVerdict::Rejected(reason)));
    }

    /// Aborts the session with blame, unless it already failed.
    pub fn abort(&mut self, stage: Stage, blame: PartyId, detail: impl Into<String>) -> Rejection {
        match &self.failure {
            Some(r) => r.clone(),
            None => self.reject(stage, blame, detail),
        }
    }

    fn reject(&mut self, stage: Stage, blame: PartyId, detail: impl Into<String>) -> Rejection {
        let r = Rejection {
            stage,
            blame,
            detail: detail.into(),
        };
        self.failure = Some(r.clone());
        r
    }

    fn prover_index(&self, k: u32) -> Option<usize> {
        (k >= 1 && k <= self.setup.provers).then(|| k as usize - 1)
    }

    pub fn handle(&mut self, msg: Message<G>) -> Result<(), Rejection> {
        if let Some(r) = &self.failure {
            return Err(r.clone());
        }
        match msg {
            Message::Client(b) => {
                self.on_client(b);
                Ok(())
            }
            Message::BitCommit(m) => self.on_bit_commit(m),
            Message::MorraCommit(m) => self.on_morra_commit(m),
            Message::MorraReveal(m) => self.on_morra_reveal(m),
            Message::Output(m) => self.on_output(m),
        }
    }

    fn on_client(&mut self, b: ClientBroadcast<G>) {
        let verdict = if self.phase != JudgePhase::Clients {
            ClientVerdict::Rejected(RejectReason::Malformed {
                detail: "submitted after the client phase closed".into(),
            })
        } else if self.verdicts.iter().any(|(id, _)| *id == b.client_id) {
            ClientVerdict::Rejected(RejectReason::Duplicate)
        } else {
            verify_client_submission(&self.pp, &self.setup.session_id, &b, self.setup.bins, self.setup.provers)
        };
        if verdict.is_accepted() {
            for (bin, row) in b.commitments.iter().enumerate() {
                for (k, c) in row.iter().enumerate() {
                    self.client_products[k][bin] = self.client_products[k][bin].combine(c);
                }
            }
        }
        self.verdicts.push((b.client_id, verdict));
    }

    fn on_bit_commit(&mut self, m: BitCommitMessage<G>) -> Result<(), Rejection> {
        let who = PartyId::Prover(m.prover);
        let Some(idx) = self.prover_index(m.prover) else {
            return Err(self.reject(Stage::BitCommit, who, "unknown prover"));
        };
        if self.phase == JudgePhase::Clients {
            self.phase = JudgePhase::BitCommits;
        }
        if self.phase != JudgePhase::BitCommits || self.bit_commits[idx].is_some() {
            return Err(self.reject(Stage::BitCommit, who, "bit commitments out of phase"));
        }
        let bins = self.setup.bins as usize;
        let coins = self.setup.coins() as usize;
        let shaped = m.commitments.len() == bins
            && m.proofs.len() == bins
            && m.commitments.iter().all(|r| r.len() == coins)
            && m.proofs.iter().all(|r| r.len() == coins);
        if !shaped {
            return Err(self.reject(Stage::BitCommit, who, "wrong number of bit commitments"));
        }
        if let Some((bin, j)) = self.first_bad_bit_proof(&m) {
            let detail = format!("bit proof {j} of bin {bin} fails");
            return Err(self.reject(Stage::BitCommit, who, detail));
        }
        self.bit_commits[idx] = Some(m.commitments);
        if self.bit_commits.iter().all(Option::is_some) {
            self.phase = JudgePhase::Morra;
        }
        Ok(())
    }

    fn first_bad_bit_proof(&self, m: &BitCommitMessage<G>) -> Option<(usize, usize)> {
        if self.batch_verify {
            let items: Vec<_> = m
                .commitments
                .iter()
                .zip(&m.proofs)
                .enumerate()
                .flat_map(|(bin, (cs, ps))| {
                    cs.iter().zip(ps).enumerate().map(move |(j, (c, p))| {
                        (*c, *p, bit_context(&self.setup, m.prover, bin as u32, j as u64))
                    })
                })
                .collect();
            if verify_bits_batch(&self.pp, &items, &mut rand::rng()) {
                return None;
            }
        }
        for (bin, (cs, ps)) in m.commitments.iter().zip(&m.proofs).enumerate() {
            for (j, (c, p)) in cs.iter().zip(ps).enumerate() {
                let ctx = bit_context(&self.setup, m.prover, bin as u32, j as u64);
                if !verify_bit(&self.pp, c, p, &ctx) {
                    return Some((bin, j));
                }
            }
        }
        None
    }

    fn on_morra_commit(&mut self, m: MorraCommit<G>) -> Result<(), Rejection> {
        let who = m.party;
        if self.phase != JudgePhase::Morra {
            return Err(self.reject(Stage::Morra, who, "coin commitment before all bit commitments"));
        }
        self.morra
            .on_commit(m)
            .map_err(|e| self.reject(Stage::Morra, who, e.to_string()))
    }

    fn on_morra_reveal(&mut self, m: MorraReveal<G>) -> Result<(), Rejection> {
        let who = m.party;
        if self.phase != JudgePhase::Morra {
            return Err(self.reject(Stage::Morra, who, "coin reveal out of phase"));
        }
        match self.morra.on_reveal(&self.pp, m) {
            Ok(Some(coins)) => {
                self.coins = Some(coins);
                self.phase = JudgePhase::Outputs;
                Ok(())
            }
            Ok(None) => Ok(()),
            Err(e) => {
                let blame = e.blamed().unwrap_or(who);
                Err(self.reject(Stage::Morra, blame, e.to_string()))
            }
        }
    }

    fn on_output(&mut self, m: ProverOutput<G>) -> Result<(), Rejection> {
        let who = PartyId::Prover(m.prover);
        let Some(idx) = self.prover_index(m.prover) else {
            return Err(self.reject(Stage::Output, who, "unknown prover"));
        };
        if self.phase != JudgePhase::Outputs || self.outputs[idx].is_some() {
            return Err(self.reject(Stage::Output, who, "output out of phase"));
        }
        let bins = self.setup.bins as usize;
        if m.y.len() != bins || m.z.len() != bins {
            return Err(self.reject(Stage::Output, who, "wrong number of outputs"));
        }
        let commits = self.bit_commits[idx].as_ref().expect("bit commits complete");
        let coins = self.coins.as_ref().expect("morra complete");
        for bin in 0..bins {
            let b = &coins[self.setup.coin_batch(m.prover, bin as u32)].bits;
            let updated: Vec<Commitment<G>> = commits[bin]
                .iter()
                .zip(b)
                .map(|(c, &bit)| verifier_update_commitments(&self.pp, c, bit))
                .collect();
            if !verifier_check_prover(&self.pp, &self.client_products[idx][bin], &updated, &m.y[bin], &m.z[bin]) {
                let detail = format!("output for bin {bin} does not match the committed sum");
                return Err(self.reject(Stage::Output, who, detail));
            }
        }
        self.outputs[idx] = Some(m);
        if self.outputs.iter().all(Option::is_some) {
            self.phase = JudgePhase::Done;
        }
        Ok(())
    }

    /// The party the session is waiting on, if any.
    pub fn waiting_on(&self) -> Option<PartyId> {
        match self.phase {
            JudgePhase::Clients => Some(PartyId::Prover(1)),
            JudgePhase::BitCommits => self
                .bit_commits
                .iter()
                .position(Option::is_none)
                .map(|i| PartyId::Prover(i as u32 + 1)),
            JudgePhase::Morra => {
                if self.morra.all_committed() {
                    self.morra.next_revealer()
                } else {
                    let seen = self.morra.commit_order();
                    self.morra.participants().iter().copied().find(|p| !seen.contains(p))
                }
            }
            JudgePhase::Outputs => self
                .outputs
                .iter()
                .position(Option::is_none)
                .map(|i| PartyId::Prover(i as u32 + 1)),
            JudgePhase::Done => None,
        }
    }

    /// Closes the session. A session that has not seen every expected
    /// message is rejected with blame on the party it was waiting for.
    pub fn finish(&mut self) -> SessionOutcome<G::Scalar> {
        if let Some(r) = &self.failure {
            return SessionOutcome::Rejected(r.clone());
        }
        if let Some(party) = self.waiting_on() {
            let stage = match self.phase {
                JudgePhase::Clients | JudgePhase::BitCommits => Stage::BitCommit,
                JudgePhase::Morra => Stage::Morra,
                _ => Stage::Output,
            };
            return SessionOutcome::Rejected(self.reject(stage, party, "did not respond"));
        }
        match aggregate(&self.outputs, &self.setup) {
            Ok(aggregates) => SessionOutcome::Accepted {
                aggregates,
                excluded_clients: self
                    .verdicts
                    .iter()
                    .filter(|(_, v)| !v.is_accepted())
                    .map(|(id, _)| *id)
                    .collect(),
            },
            Err(e) => SessionOutcome::Rejected(self.reject(Stage::Aggregate, PartyId::Verifier, e.to_string())),
        }
    }
}
