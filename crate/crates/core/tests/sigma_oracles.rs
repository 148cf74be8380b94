mod common;

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vdp_core::group::{ModQScalar, PrimeGroup, PublicParams, Q101, Ristretto255, ScalarField, ToyGroup61, ToyQ101};
use vdp_core::sigma_or::{
    derive_challenge, extract_opening, prove_bit, prove_bit_forced, verify_bit, verify_with_challenge, Branch,
    OrProverState, ProofContext,
};

type S61 = <ToyGroup61 as PrimeGroup>::Scalar;

fn ctx(i: u64) -> ProofContext {
    ProofContext::new(b"sigma-tests", "prover-1", i)
}

#[test]
fn repeated_proofs_of_one_statement_are_distinct() {
    let pp = PublicParams::<Ristretto255>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    type S = <Ristretto255 as PrimeGroup>::Scalar;
    let r = S::random(&mut rng);
    let c = pp.commit(&S::one(), &r);
    let mut seen = HashSet::new();
    for _ in 0..100 {
        let proof = prove_bit(&pp, &S::one(), &r, &c, &ctx(0), &mut rng).unwrap();
        assert!(verify_bit(&pp, &c, &proof, &ctx(0)));
        assert!(seen.insert(proof.encode()));
    }
}

#[test]
fn a_commitment_to_two_fails_through_either_branch() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for i in 0..200 {
        let r = S61::random(&mut rng);
        let c = pp.commit(&S61::from_u64(2), &r);
        for branch in [Branch::Zero, Branch::One] {
            let proof = prove_bit_forced(&pp, branch, &r, &c, &ctx(i), &mut rng);
            assert!(!verify_bit(&pp, &c, &proof, &ctx(i)));
        }
    }
}

#[test]
fn extractor_recovers_the_opening() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for (x, branch) in [(0u64, Branch::Zero), (1, Branch::One)] {
        for _ in 0..50 {
            let r = S61::random(&mut rng);
            let c = pp.commit(&S61::from_u64(x), &r);
            let state = OrProverState::commit(&pp, branch, &r, &c, &mut rng);
            let (e1, e2) = (S61::random(&mut rng), S61::random(&mut rng));
            let (a, b) = (state.respond(&e1), state.respond(&e2));
            assert!(verify_with_challenge(&pp, &c, &a, &e1));
            assert!(verify_with_challenge(&pp, &c, &b, &e2));
            let (got, r_ext) = extract_opening(&a, &b).unwrap();
            assert_eq!(got, branch);
            assert!(pp.verify_opening(&c, &S61::from_u64(x), &r_ext));
        }
    }
}

#[test]
fn proofs_are_bound_to_their_context() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let r = S61::random(&mut rng);
    let c = pp.commit(&S61::zero(), &r);
    let proof = prove_bit(&pp, &S61::zero(), &r, &c, &ctx(7), &mut rng).unwrap();
    assert!(verify_bit(&pp, &c, &proof, &ctx(7)));
    assert!(!verify_bit(&pp, &c, &proof, &ctx(8)));
    assert!(!verify_bit(&pp, &c, &proof, &ProofContext::new(b"sigma-tests", "prover-2", 7)));
    assert!(!verify_bit(&pp, &c, &proof, &ProofContext::new(b"other", "prover-1", 7)));
}

#[test]
fn challenges_stay_below_the_order() {
    let pp = PublicParams::<ToyQ101>::standard();
    let c = pp.commit(&ModQScalar::new(1), &ModQScalar::new(5));
    for i in 0..500 {
        let e = derive_challenge(&pp, &ctx(i), &c, pp.g(), pp.h());
        assert!(e.value() < 101);
    }
}

// The simulated half of a proof and the honest half are both uniform on
// Z_q, whichever bit is committed; this is what keeps the bit hidden.
#[test]
fn transcript_scalars_are_uniform_on_q101() {
    let pp = PublicParams::<ToyQ101>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let trials = 20_000;
    for x in [0u64, 1] {
        let mut e0 = vec![0u64; 101];
        let mut e1 = vec![0u64; 101];
        let mut v_sim = vec![0u64; 101];
        for i in 0..trials {
            let r = ModQScalar::<Q101>::random(&mut rng);
            let c = pp.commit(&ModQScalar::new(x), &r);
            let proof = prove_bit(&pp, &ModQScalar::new(x), &r, &c, &ctx(i), &mut rng).unwrap();
            e0[proof.e0.value() as usize] += 1;
            e1[proof.e1.value() as usize] += 1;
            let v = if x == 0 { proof.v1 } else { proof.v0 };
            v_sim[v.value() as usize] += 1;
        }
        for (name, counts) in [("e0", &e0), ("e1", &e1), ("simulated v", &v_sim)] {
            let p = common::uniform_p(counts);
            assert!(p > 0.001, "x={x} {name}: p={p}");
        }
    }
}
