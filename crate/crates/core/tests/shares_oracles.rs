mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vdp_core::group::{ModQScalar, PrimeGroup, PublicParams, Q101, Ristretto255, ScalarField, ToyGroup61};
use vdp_core::shares::{
    build_client_submission, build_unchecked, derive_input_commitment, split_secret, verify_client_submission,
    ClientVerdict, RejectReason, ShareError,
};

type S = ModQScalar<Q101>;
type S61 = <ToyGroup61 as PrimeGroup>::Scalar;

#[test]
fn any_k_minus_one_shares_are_jointly_uniform() {
    let mut rng = ChaCha20Rng::seed_from_u64(20);
    let mut pairs = vec![0u64; 101 * 101];
    let mut last_two = vec![0u64; 101 * 101];
    for i in 0..300_000u64 {
        // Heavily skewed secrets: the shares must not care.
        let x = S::new(i % 3);
        let shares = split_secret(&x, 3, &mut rng);
        assert_eq!(shares.iter().fold(S::zero(), |a, s| a + *s), x);
        pairs[(shares[0].value() * 101 + shares[1].value()) as usize] += 1;
        last_two[(shares[1].value() * 101 + shares[2].value()) as usize] += 1;
    }
    assert!(common::uniform_p(&pairs) > 0.001);
    assert!(common::uniform_p(&last_two) > 0.001);
}

#[test]
fn single_prover_holds_the_input() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let x = S61::from_u64(1);
    assert_eq!(split_secret(&x, 1, &mut rng), vec![x]);
}

#[test]
fn honest_submissions_verify_and_derive_the_input_commitment() {
    let pp = PublicParams::<Ristretto255>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(22);
    type R = <Ristretto255 as PrimeGroup>::Scalar;
    for (input, k) in [(vec![1u64], 2usize), (vec![0], 1), (vec![0, 0, 1, 0], 2), (vec![1, 0], 3)] {
        let sub = build_client_submission(&pp, b"sid", 9, &input, k, &mut rng).unwrap();
        let b = &sub.broadcast;
        assert_eq!(
            verify_client_submission(&pp, b"sid", b, input.len() as u32, k as u32),
            ClientVerdict::Accepted
        );
        for (coord, x) in input.iter().enumerate() {
            let r = sub.payloads.iter().fold(R::zero(), |a, p| a + p.randomness[coord]);
            let derived = derive_input_commitment(&b.commitments[coord]);
            assert!(pp.verify_opening(&derived, &R::from_u64(*x), &r));
        }
    }
}

#[test]
fn invalid_inputs_are_refused_or_rejected() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    assert_eq!(
        build_client_submission(&pp, b"sid", 0, &[1, 1, 0, 0], 2, &mut rng).err(),
        Some(ShareError::NotOneHot)
    );
    assert_eq!(build_client_submission(&pp, b"sid", 0, &[2], 2, &mut rng).err(), Some(ShareError::NotABit));

    let two = build_unchecked(&pp, b"sid", 0, &[S61::from_u64(2)], 2, &mut rng);
    assert_eq!(
        verify_client_submission(&pp, b"sid", &two.broadcast, 1, 2),
        ClientVerdict::Rejected(RejectReason::BadOrProof { coord: 0 })
    );
    let two_hot = build_unchecked(&pp, b"sid", 1, &[S61::one(), S61::one(), S61::zero()], 2, &mut rng);
    assert_eq!(
        verify_client_submission(&pp, b"sid", &two_hot.broadcast, 3, 2),
        ClientVerdict::Rejected(RejectReason::NormCheck)
    );
    let empty = build_unchecked(&pp, b"sid", 2, &[S61::zero(), S61::zero()], 2, &mut rng);
    assert_eq!(
        verify_client_submission(&pp, b"sid", &empty.broadcast, 2, 2),
        ClientVerdict::Rejected(RejectReason::NormCheck)
    );
}

#[test]
fn tampering_with_any_share_commitment_breaks_the_bit_proof() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(24);
    for k in 0..3 {
        let mut sub = build_client_submission(&pp, b"sid", 4, &[1], 3, &mut rng).unwrap();
        let c = &mut sub.broadcast.commitments[0][k];
        *c = c.combine(&pp.commit(&S61::zero(), &S61::one()));
        assert_eq!(
            verify_client_submission(&pp, b"sid", &sub.broadcast, 1, 3),
            ClientVerdict::Rejected(RejectReason::BadOrProof { coord: 0 })
        );
    }
}
