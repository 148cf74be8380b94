//! Client inputs: additive sharing, public commitments and validity proofs.
//!
//! A client holding a bit (counting query) or a one-hot vector of length `M`
//! (histogram) splits every coordinate into `K` additive shares, commits to
//! each share, and proves on the product of its per-prover commitments that
//! each coordinate is a bit. For `M > 1` it also opens the product of all
//! coordinates to `1`, which together with the bit proofs pins the input to
//! a one-hot vector.

use rand::Rng;

use crate::encoding::{DecodeError, Reader, Writer};
use crate::group::{Commitment, PrimeGroup, PublicParams, ScalarField};
use crate::party::PartyId;
use crate::sigma_or::{prove_bit_forced, verify_bit, Branch, OrProof, ProofContext};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ShareError {
    #[error("need at least one prover")]
    NoProvers,
    #[error("input must have at least one coordinate")]
    Empty,
    #[error("counting input must be 0 or 1")]
    NotABit,
    #[error("histogram input must be one-hot")]
    NotOneHot,
}

/// `K` uniform shares summing to `x`.
pub fn split_secret<S: ScalarField, R: Rng + ?Sized>(x: &S, provers: usize, rng: &mut R) -> Vec<S> {
    assert!(provers >= 1, "split_secret needs at least one share");
    let mut shares: Vec<S> = (1..provers).map(|_| S::random(rng)).collect();
    let rest = shares.iter().fold(*x, |acc, s| acc - *s);
    shares.push(rest);
    shares
}

/// Input validity evidence: one OR proof per coordinate, plus the opening
/// randomness of the coordinate product when `M > 1`.
pub struct ValidityProof<G: PrimeGroup> {
    pub proofs: Vec<OrProof<G>>,
    pub norm_randomness: Option<G::Scalar>,
}

impl<G: PrimeGroup> Clone for ValidityProof<G> {
    fn clone(&self) -> Self {
        ValidityProof {
            proofs: self.proofs.clone(),
            norm_randomness: self.norm_randomness,
        }
    }
}

/// What a client broadcasts publicly.
pub struct ClientBroadcast<G: PrimeGroup> {
    pub client_id: u64,
    pub bins: u32,
    pub provers: u32,
    /// `commitments[coord][k]` commits to prover `k+1`'s share of `coord`.
    pub commitments: Vec<Vec<Commitment<G>>>,
    pub validity: ValidityProof<G>,
}

impl<G: PrimeGroup> Clone for ClientBroadcast<G> {
    fn clone(&self) -> Self {
        ClientBroadcast {
            client_id: self.client_id,
            bins: self.bins,
            provers: self.provers,
            commitments: self.commitments.clone(),
            validity: self.validity.clone(),
        }
    }
}

/// What one prover receives privately from one client, per coordinate.
pub struct ProverPayload<G: PrimeGroup> {
    pub client_id: u64,
    pub shares: Vec<G::Scalar>,
    pub randomness: Vec<G::Scalar>,
}

impl<G: PrimeGroup> Clone for ProverPayload<G> {
    fn clone(&self) -> Self {
        ProverPayload {
            client_id: self.client_id,
            shares: self.shares.clone(),
            randomness: self.randomness.clone(),
        }
    }
}

pub struct ClientSubmission<G: PrimeGroup> {
    pub broadcast: ClientBroadcast<G>,
    /// `payloads[k]` goes to prover `k+1`.
    pub payloads: Vec<ProverPayload<G>>,
}

impl<G: PrimeGroup> Clone for ClientSubmission<G> {
    fn clone(&self) -> Self {
        ClientSubmission {
            broadcast: self.broadcast.clone(),
            payloads: self.payloads.clone(),
        }
    }
}

/// Why a client was excluded.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    Malformed { detail: String },
    BadOrProof { coord: u32 },
    NormCheck,
    Duplicate,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::Malformed { detail } => write!(f, "malformed submission: {detail}"),
            RejectReason::BadOrProof { coord } => write!(f, "bit proof for coordinate {coord} fails"),
            RejectReason::NormCheck => f.write_str("coordinates do not sum to one"),
            RejectReason::Duplicate => f.write_str("duplicate client id"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ClientVerdict {
    Accepted,
    Rejected(RejectReason),
}

impl ClientVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, ClientVerdict::Accepted)
    }
}

/// Context for the proof on coordinate `coord` of client `client_id`.
pub fn client_context(session_id: &[u8], client_id: u64, coord: u32) -> ProofContext {
    ProofContext::new(session_id, PartyId::Client(client_id).label(), coord as u64)
}

fn check_input(input: &[u64]) -> Result<(), ShareError> {
    match input {
        [] => Err(ShareError::Empty),
        [x] if *x > 1 => Err(ShareError::NotABit),
        [_] => Ok(()),
        xs if xs.iter().all(|&x| x <= 1) && xs.iter().sum::<u64>() == 1 => Ok(()),
        _ => Err(ShareError::NotOneHot),
    }
}

/// Builds an honest submission. `input` has length 1 for a counting query
/// (value 0 or 1) or length `M > 1` for a one-hot histogram input.
pub fn build_client_submission<G: PrimeGroup, R: Rng + ?Sized>(
    pp: &PublicParams<G>,
    session_id: &[u8],
    client_id: u64,
    input: &[u64],
    provers: usize,
    rng: &mut R,
) -> Result<ClientSubmission<G>, ShareError> {
    if provers == 0 {
        return Err(ShareError::NoProvers);
    }
    check_input(input)?;
    let values: Vec<G::Scalar> = input.iter().map(|&x| G::Scalar::from_u64(x)).collect();
    Ok(build_unchecked(pp, session_id, client_id, &values, provers, rng))
}

/// Builds a submission for arbitrary coordinate values, answering each OR
/// proof through the branch a cheating client would pick. Models malicious
/// clients; the result fails verification whenever the input is invalid.
pub fn build_unchecked<G: PrimeGroup, R: Rng + ?Sized>(
    pp: &PublicParams<G>,
    session_id: &[u8],
    client_id: u64,
    values: &[G::Scalar],
    provers: usize,
    rng: &mut R,
) -> ClientSubmission<G> {
    let bins = values.len();
    let mut payloads: Vec<ProverPayload<G>> = (0..provers)
        .map(|_| ProverPayload {
            client_id,
            shares: Vec::with_capacity(bins),
            randomness: Vec::with_capacity(bins),
        })
        .collect();
    let mut commitments = Vec::with_capacity(bins);
    let mut proofs = Vec::with_capacity(bins);
    let mut norm = G::Scalar::zero();

    for (coord, x) in values.iter().enumerate() {
        let shares = split_secret(x, provers, rng);
        let mut row = Vec::with_capacity(provers);
        let mut r_sum = G::Scalar::zero();
        for (k, share) in shares.iter().enumerate() {
            let r = G::Scalar::random(rng);
            r_sum = r_sum + r;
            row.push(pp.commit(share, &r));
            payloads[k].shares.push(*share);
            payloads[k].randomness.push(r);
        }
        let derived = derive_input_commitment(&row);
        let branch = if x.is_zero() { Branch::Zero } else { Branch::One };
        let ctx = client_context(session_id, client_id, coord as u32);
        proofs.push(prove_bit_forced(pp, branch, &r_sum, &derived, &ctx, rng));
        commitments.push(row);
        norm = norm + r_sum;
    }

    ClientSubmission {
        broadcast: ClientBroadcast {
            client_id,
            bins: bins as u32,
            provers: provers as u32,
            commitments,
            validity: ValidityProof {
                proofs,
                norm_randomness: (bins > 1).then_some(norm),
            },
        },
        payloads,
    }
}

/// `c_i = ∏_k c_{i,k}`.
pub fn derive_input_commitment<G: PrimeGroup>(per_prover: &[Commitment<G>]) -> Commitment<G> {
    Commitment::product(per_prover)
}

/// Public check of a client broadcast against the session shape. Any third
/// party recomputes the same verdict from the broadcast alone.
pub fn verify_client_submission<G: PrimeGroup>(
    pp: &PublicParams<G>,
    session_id: &[u8],
    b: &ClientBroadcast<G>,
    bins: u32,
    provers: u32,
) -> ClientVerdict {
    let malformed = |detail: &str| {
        ClientVerdict::Rejected(RejectReason::Malformed {
            detail: detail.to_string(),
        })
    };
    if b.bins != bins || b.provers != provers {
        return malformed("shape does not match the session");
    }
    if b.commitments.len() != bins as usize
        || b.commitments.iter().any(|row| row.len() != provers as usize)
        || b.validity.proofs.len() != bins as usize
    {
        return malformed("inconsistent lengths");
    }
    if (bins > 1) != b.validity.norm_randomness.is_some() {
        return malformed("norm opening present iff bins > 1");
    }
    let derived: Vec<Commitment<G>> = b.commitments.iter().map(|row| derive_input_commitment(row)).collect();
    for (coord, (c, proof)) in derived.iter().zip(&b.validity.proofs).enumerate() {
        let ctx = client_context(session_id, b.client_id, coord as u32);
        if !verify_bit(pp, c, proof, &ctx) {
            return ClientVerdict::Rejected(RejectReason::BadOrProof { coord: coord as u32 });
        }
    }
    if let Some(r) = &b.validity.norm_randomness {
        // g^1 h^r = ∏_j c_j
        if !pp.verify_opening(&Commitment::product(&derived), &G::Scalar::one(), r) {
            return ClientVerdict::Rejected(RejectReason::NormCheck);
        }
    }
    ClientVerdict::Accepted
}

/// Prover-side check that a private payload opens the client's public
/// commitments for prover `k` (1-based).
pub fn payload_matches<G: PrimeGroup>(
    pp: &PublicParams<G>,
    b: &ClientBroadcast<G>,
    payload: &ProverPayload<G>,
    k: u32,
) -> bool {
    let idx = k as usize - 1;
    payload.client_id == b.client_id
        && payload.shares.len() == b.commitments.len()
        && payload.randomness.len() == b.commitments.len()
        && b.commitments.iter().enumerate().all(|(coord, row)| {
            row.get(idx).is_some_and(|c| {
                pp.verify_opening(c, &payload.shares[coord], &payload.randomness[coord])
            })
        })
}

impl<G: PrimeGroup> ClientBroadcast<G> {
    /// `client_id ‖ M ‖ K ‖ commitments (coordinate-major, then prover) ‖
    /// M proofs ‖ norm flag ‖ [norm randomness]`.
    pub fn write(&self, w: &mut Writer) {
        w.u64(self.client_id).u32(self.bins).u32(self.provers);
        for row in &self.commitments {
            for c in row {
                w.element::<G>(c.point());
            }
        }
        for p in &self.validity.proofs {
            p.write(w);
        }
        match &self.validity.norm_randomness {
            Some(r) => {
                w.u8(1).scalar::<G>(r);
            }
            None => {
                w.u8(0);
            }
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write(&mut w);
        w.finish()
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let client_id = r.u64()?;
        let bins = r.u32()?;
        let provers = r.u32()?;
        let cells = (bins as usize)
            .checked_mul(provers as usize)
            .filter(|&n| n.saturating_mul(G::ELEMENT_LEN) <= r.remaining())
            .ok_or(DecodeError::Truncated)?;
        let flat = (0..cells)
            .map(|_| r.element::<G>().map(Commitment))
            .collect::<Result<Vec<_>, _>>()?;
        let commitments = if provers == 0 {
            vec![Vec::new(); bins as usize]
        } else {
            flat.chunks(provers as usize).map(|c| c.to_vec()).collect()
        };
        if (bins as usize).saturating_mul(OrProof::<G>::ENCODED_LEN) > r.remaining() {
            return Err(DecodeError::Truncated);
        }
        let proofs = (0..bins)
            .map(|_| OrProof::read(r))
            .collect::<Result<Vec<_>, _>>()?;
        let norm_randomness = match r.u8()? {
            0 => None,
            1 => Some(r.scalar::<G>()?),
            _ => return Err(DecodeError::Invalid("norm flag")),
        };
        Ok(ClientBroadcast {
            client_id,
            bins,
            provers,
            commitments,
            validity: ValidityProof {
                proofs,
                norm_randomness,
            },
        })
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let b = Self::read(&mut r)?;
        r.finish()?;
        Ok(b)
    }
}
