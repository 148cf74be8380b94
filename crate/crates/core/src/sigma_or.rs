//! Non-interactive disjunctive Σ-proof that a Pedersen commitment opens to 0 or 1.
//!
//! The statement `c = h^r  OR  c·g^-1 = h^r` is proven with the
//! Cramer–Damgård–Schoenmakers OR composition: the prover simulates the branch
//! whose statement is false and answers the true branch honestly. The
//! challenge comes from a Fiat–Shamir hash over the public parameters, a
//! [`ProofContext`], the commitment and the first-round messages.
//!
//! Verification checks `e0 + e1 = e`, `d0·c^e0 = h^v0` and
//! `d1·c^e1 = g^e1·h^v1`.

use std::fmt;

use rand::Rng;

use crate::encoding::{DecodeError, Reader, Writer};
use crate::group::{hash_to_scalar, Commitment, PrimeGroup, PublicParams, ScalarField};

/// Fiat–Shamir domain tag.
pub const OR_DOMAIN: &[u8] = b"VDP-OR-v1";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SigmaError {
    #[error("value is not a bit")]
    NotABit,
    #[error("commitment does not open to the given value and randomness")]
    InconsistentCommitment,
}

/// Domain separation for one proved statement: unique per statement within
/// a session.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProofContext {
    pub session_id: Vec<u8>,
    pub party_id: Vec<u8>,
    pub index: u64,
}

impl ProofContext {
    pub fn new(session_id: &[u8], party_id: impl Into<Vec<u8>>, index: u64) -> Self {
        ProofContext {
            session_id: session_id.to_vec(),
            party_id: party_id.into(),
            index,
        }
    }
}

/// Which disjunct of the OR statement a prover answers honestly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `c = h^r`, i.e. the commitment opens to 0.
    Zero,
    /// `c / g = h^r`, i.e. the commitment opens to 1.
    One,
}

pub struct OrProof<G: PrimeGroup> {
    pub d0: G::Element,
    pub d1: G::Element,
    pub e0: G::Scalar,
    pub e1: G::Scalar,
    pub v0: G::Scalar,
    pub v1: G::Scalar,
}

impl<G: PrimeGroup> Clone for OrProof<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for OrProof<G> {}
impl<G: PrimeGroup> PartialEq for OrProof<G> {
    fn eq(&self, o: &Self) -> bool {
        self.d0 == o.d0
            && self.d1 == o.d1
            && self.e0 == o.e0
            && self.e1 == o.e1
            && self.v0 == o.v0
            && self.v1 == o.v1
    }
}
impl<G: PrimeGroup> Eq for OrProof<G> {}
impl<G: PrimeGroup> fmt::Debug for OrProof<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrProof")
            .field("d0", &self.d0)
            .field("d1", &self.d1)
            .field("e0", &self.e0)
            .field("e1", &self.e1)
            .field("v0", &self.v0)
            .field("v1", &self.v1)
            .finish()
    }
}

impl<G: PrimeGroup> OrProof<G> {
    pub const ENCODED_LEN: usize = 2 * G::ELEMENT_LEN + 4 * <G::Scalar as ScalarField>::ENCODED_LEN;

    /// Fixed field order `d0, d1, e0, e1, v0, v1`.
    pub fn write(&self, w: &mut Writer) {
        w.element::<G>(&self.d0)
            .element::<G>(&self.d1)
            .scalar::<G>(&self.e0)
            .scalar::<G>(&self.e1)
            .scalar::<G>(&self.v0)
            .scalar::<G>(&self.v1);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(OrProof {
            d0: r.element::<G>()?,
            d1: r.element::<G>()?,
            e0: r.scalar::<G>()?,
            e1: r.scalar::<G>()?,
            v0: r.scalar::<G>()?,
            v1: r.scalar::<G>()?,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write(&mut w);
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let proof = Self::read(&mut r)?;
        r.finish()?;
        Ok(proof)
    }
}

/// Fiat–Shamir challenge for an OR proof.
pub fn derive_challenge<G: PrimeGroup>(
    pp: &PublicParams<G>,
    ctx: &ProofContext,
    c: &Commitment<G>,
    d0: &G::Element,
    d1: &G::Element,
) -> G::Scalar {
    let mut w = Writer::new();
    w.bytes(&pp.encode())
        .bytes(&ctx.session_id)
        .bytes(&ctx.party_id)
        .u64(ctx.index)
        .element::<G>(c.point())
        .element::<G>(d0)
        .element::<G>(d1);
    hash_to_scalar::<G>(OR_DOMAIN, w.as_slice())
}

/// Prover state after the first move of the interactive protocol.
pub struct OrProverState<G: PrimeGroup> {
    real: Branch,
    r: G::Scalar,
    nonce: G::Scalar,
    sim_e: G::Scalar,
    sim_v: G::Scalar,
    d0: G::Element,
    d1: G::Element,
}

impl<G: PrimeGroup> OrProverState<G> {
    /// First move: simulate the other branch, commit to a nonce on `real`.
    ///
    /// No check is made that `real` matches the commitment; an inconsistent
    /// choice produces a proof that fails verification.
    pub fn commit<R: Rng + ?Sized>(
        pp: &PublicParams<G>,
        real: Branch,
        r: &G::Scalar,
        c: &Commitment<G>,
        rng: &mut R,
    ) -> Self {
        let sim_e = G::Scalar::random(rng);
        let sim_v = G::Scalar::random(rng);
        let nonce = G::Scalar::random(rng);
        let real_d = pp.h_pow(&nonce);
        let (d0, d1) = match real {
            Branch::Zero => {
                // d1 = h^v1 · (c/g)^-e1
                let c_over_g = G::op(c.point(), &G::inverse(pp.g()));
                let d1 = G::op(&pp.h_pow(&sim_v), &G::pow(&c_over_g, &-sim_e));
                (real_d, d1)
            }
            Branch::One => {
                // d0 = h^v0 · c^-e0
                let d0 = G::op(&pp.h_pow(&sim_v), &G::pow(c.point(), &-sim_e));
                (d0, real_d)
            }
        };
        OrProverState {
            real,
            r: *r,
            nonce,
            sim_e,
            sim_v,
            d0,
            d1,
        }
    }

    pub fn first_message(&self) -> (G::Element, G::Element) {
        (self.d0, self.d1)
    }

    /// Third move: split the challenge and answer the real branch.
    pub fn respond(&self, challenge: &G::Scalar) -> OrProof<G> {
        let real_e = *challenge - self.sim_e;
        let real_v = self.nonce + real_e * self.r;
        let (e0, e1, v0, v1) = match self.real {
            Branch::Zero => (real_e, self.sim_e, real_v, self.sim_v),
            Branch::One => (self.sim_e, real_e, self.sim_v, real_v),
        };
        OrProof {
            d0: self.d0,
            d1: self.d1,
            e0,
            e1,
            v0,
            v1,
        }
    }
}

/// Proves that `c = Com(x, r)` with `x ∈ {0, 1}`.
pub fn prove_bit<G: PrimeGroup, R: Rng + ?Sized>(
    pp: &PublicParams<G>,
    x: &G::Scalar,
    r: &G::Scalar,
    c: &Commitment<G>,
    ctx: &ProofContext,
    rng: &mut R,
) -> Result<OrProof<G>, SigmaError> {
    let branch = if x.is_zero() {
        Branch::Zero
    } else if *x == G::Scalar::one() {
        Branch::One
    } else {
        return Err(SigmaError::NotABit);
    };
    if !pp.verify_opening(c, x, r) {
        return Err(SigmaError::InconsistentCommitment);
    }
    Ok(prove_bit_forced(pp, branch, r, c, ctx, rng))
}

/// Runs the prover through `branch` without checking the statement. Used to
/// model cheating provers; honest code calls [`prove_bit`].
pub fn prove_bit_forced<G: PrimeGroup, R: Rng + ?Sized>(
    pp: &PublicParams<G>,
    branch: Branch,
    r: &G::Scalar,
    c: &Commitment<G>,
    ctx: &ProofContext,
    rng: &mut R,
) -> OrProof<G> {
    let state = OrProverState::commit(pp, branch, r, c, rng);
    let (d0, d1) = state.first_message();
    let e = derive_challenge(pp, ctx, c, &d0, &d1);
    state.respond(&e)
}

pub fn verify_bit<G: PrimeGroup>(
    pp: &PublicParams<G>,
    c: &Commitment<G>,
    proof: &OrProof<G>,
    ctx: &ProofContext,
) -> bool {
    let e = derive_challenge(pp, ctx, c, &proof.d0, &proof.d1);
    verify_with_challenge(pp, c, proof, &e)
}

/// The verifier's checks for an explicit challenge (interactive view).
pub fn verify_with_challenge<G: PrimeGroup>(
    pp: &PublicParams<G>,
    c: &Commitment<G>,
    proof: &OrProof<G>,
    challenge: &G::Scalar,
) -> bool {
    if proof.e0 + proof.e1 != *challenge {
        return false;
    }
    let lhs0 = G::op(&proof.d0, &G::pow(c.point(), &proof.e0));
    if lhs0 != pp.h_pow(&proof.v0) {
        return false;
    }
    let lhs1 = G::op(&proof.d1, &G::pow(c.point(), &proof.e1));
    lhs1 == G::op(&pp.g_pow(&proof.e1), &pp.h_pow(&proof.v1))
}

/// Verifies many proofs with one multi-exponentiation over a random linear
/// combination of the verification equations. Accepts exactly the batches in
/// which every proof verifies, except with probability about `1/q`.
pub fn verify_bits_batch<G: PrimeGroup, R: Rng + ?Sized>(
    pp: &PublicParams<G>,
    items: &[(Commitment<G>, OrProof<G>, ProofContext)],
    rng: &mut R,
) -> bool {
    let mut terms = Vec::with_capacity(4 * items.len() + 2);
    let mut g_exp = G::Scalar::zero();
    let mut h_exp = G::Scalar::zero();
    for (c, proof, ctx) in items {
        let e = derive_challenge(pp, ctx, c, &proof.d0, &proof.d1);
        if proof.e0 + proof.e1 != e {
            return false;
        }
        let a = G::Scalar::random(rng);
        let b = G::Scalar::random(rng);
        // d0^a c^(a e0) h^(-a v0) · d1^b c^(b e1) g^(-b e1) h^(-b v1) = 1
        terms.push((proof.d0, a));
        terms.push((proof.d1, b));
        terms.push((*c.point(), a * proof.e0 + b * proof.e1));
        g_exp = g_exp - b * proof.e1;
        h_exp = h_exp - a * proof.v0 - b * proof.v1;
    }
    terms.push((*pp.g(), g_exp));
    terms.push((*pp.h(), h_exp));
    G::multi_pow(&terms) == G::identity()
}

/// Special-soundness extractor: from two accepting transcripts that share a
/// first message but answer different challenges, recovers an opening of `c`
/// to 0 or 1.
pub fn extract_opening<G: PrimeGroup>(
    a: &OrProof<G>,
    b: &OrProof<G>,
) -> Option<(Branch, G::Scalar)> {
    if a.d0 != b.d0 || a.d1 != b.d1 {
        return None;
    }
    if a.e0 != b.e0 {
        let r = (a.v0 - b.v0) * (a.e0 - b.e0).invert()?;
        Some((Branch::Zero, r))
    } else if a.e1 != b.e1 {
        let r = (a.v1 - b.v1) * (a.e1 - b.e1).invert()?;
        Some((Branch::One, r))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Ristretto255, ToyGroup61};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ctx(i: u64) -> ProofContext {
        ProofContext::new(b"session", "client-1", i)
    }

    fn completeness<G: PrimeGroup>() {
        let pp = PublicParams::<G>::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        for x in [0u64, 1] {
            for i in 0..20 {
                let x = G::Scalar::from_u64(x);
                let r = G::Scalar::random(&mut rng);
                let c = pp.commit(&x, &r);
                let proof = prove_bit(&pp, &x, &r, &c, &ctx(i), &mut rng).unwrap();
                assert!(verify_bit(&pp, &c, &proof, &ctx(i)));
                assert_eq!(OrProof::<G>::decode(&proof.encode()).unwrap(), proof);
                assert_eq!(proof.encode().len(), OrProof::<G>::ENCODED_LEN);
            }
        }
    }

    #[test]
    fn honest_proofs_verify() {
        completeness::<Ristretto255>();
        completeness::<ToyGroup61>();
    }

    #[test]
    fn challenge_is_deterministic_and_input_sensitive() {
        type G = Ristretto255;
        let pp = PublicParams::<G>::standard();
        let c = pp.commit_u64(1, &ScalarField::from_u64(5));
        let d = *pp.g();
        let e1 = derive_challenge(&pp, &ctx(0), &c, &d, &d);
        assert_eq!(e1, derive_challenge(&pp, &ctx(0), &c, &d, &d));
        let mut enc = c.encode();
        enc[3] ^= 1;
        if let Some(c2) = Commitment::<G>::decode(&enc) {
            assert_ne!(e1, derive_challenge(&pp, &ctx(0), &c2, &d, &d));
        }
        assert_ne!(e1, derive_challenge(&pp, &ctx(1), &c, &d, &d));
        assert_ne!(
            e1,
            derive_challenge(&pp, &ProofContext::new(b"session", "client-2", 0), &c, &d, &d)
        );
    }

    #[test]
    fn prove_refuses_bad_witness() {
        type G = ToyGroup61;
        type S = <G as PrimeGroup>::Scalar;
        let pp = PublicParams::<G>::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let r = S::random(&mut rng);
        let c2 = pp.commit(&S::from_u64(2), &r);
        assert_eq!(
            prove_bit(&pp, &S::from_u64(2), &r, &c2, &ctx(0), &mut rng),
            Err(SigmaError::NotABit)
        );
        let c1 = pp.commit(&S::one(), &r);
        assert_eq!(
            prove_bit(&pp, &S::zero(), &r, &c1, &ctx(0), &mut rng),
            Err(SigmaError::InconsistentCommitment)
        );
    }

    #[test]
    fn non_bit_commitment_fails_under_either_branch() {
        type G = Ristretto255;
        type S = <G as PrimeGroup>::Scalar;
        let pp = PublicParams::<G>::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        for _ in 0..20 {
            let r = S::random(&mut rng);
            let c = pp.commit(&S::from_u64(2), &r);
            for branch in [Branch::Zero, Branch::One] {
                let proof = prove_bit_forced(&pp, branch, &r, &c, &ctx(0), &mut rng);
                assert!(!verify_bit(&pp, &c, &proof, &ctx(0)));
            }
        }
    }

    #[test]
    fn tampered_response_and_wrong_context_fail() {
        type G = ToyGroup61;
        type S = <G as PrimeGroup>::Scalar;
        let pp = PublicParams::<G>::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        let r = S::random(&mut rng);
        let c = pp.commit(&S::one(), &r);
        let proof = prove_bit(&pp, &S::one(), &r, &c, &ctx(0), &mut rng).unwrap();
        for field in 0..4 {
            let mut bad = proof;
            match field {
                0 => bad.v0 = bad.v0 + S::one(),
                1 => bad.v1 = bad.v1 + S::one(),
                2 => bad.e0 = bad.e0 + S::one(),
                _ => bad.e1 = bad.e1 + S::one(),
            }
            assert!(!verify_bit(&pp, &c, &bad, &ctx(0)));
        }
        assert!(!verify_bit(&pp, &c, &proof, &ctx(1)));
        assert!(!verify_bit(&pp, &c, &proof, &ProofContext::new(b"other", "client-1", 0)));
        assert!(!verify_bit(&pp, &pp.commit(&S::zero(), &r), &proof, &ctx(0)));
    }

    #[test]
    fn batch_verification_matches_individual() {
        type G = Ristretto255;
        type S = <G as PrimeGroup>::Scalar;
        let pp = PublicParams::<G>::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(25);
        let mut items: Vec<_> = (0..16u64)
            .map(|i| {
                let x = S::from_u64(i % 2);
                let r = S::random(&mut rng);
                let c = pp.commit(&x, &r);
                let p = prove_bit(&pp, &x, &r, &c, &ctx(i), &mut rng).unwrap();
                (c, p, ctx(i))
            })
            .collect();
        assert!(verify_bits_batch(&pp, &items, &mut rng));
        items[7].1.v1 = items[7].1.v1 + S::one();
        assert!(!verify_bits_batch(&pp, &items, &mut rng));
        assert!(verify_bits_batch::<G, _>(&pp, &[], &mut rng));
    }
}
