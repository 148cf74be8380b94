mod common;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vdp_core::group::{ModQScalar, PrimeGroup, PublicParams, Q101, ScalarField, ToyGroup61, ToyQ101};
use vdp_core::morra::{
    morra_combine, run_morra, scalar_to_bit, HonestContributor, MorraCommit, MorraContribution, MorraContributor,
    MorraError, MorraFault, MorraReveal, MorraRound,
};
use vdp_core::party::PartyId;

type S = ModQScalar<Q101>;

#[test]
fn one_uniform_value_makes_the_sum_uniform_exactly() {
    // For any fixed adversarial total a, m -> m + a permutes Z_101.
    for a in 0..101u64 {
        let mut hits = [0u8; 101];
        let mut zeros = 0;
        for m in 0..101u64 {
            let x = morra_combine(&[S::new(m), S::new(a), S::new(3 * a)]).unwrap();
            hits[x.value() as usize] += 1;
            zeros += (scalar_to_bit(&x) == 0) as u32;
        }
        assert!(hits.iter().all(|&h| h == 1));
        assert_eq!(zeros, 52);
    }
}

#[test]
fn sum_with_fixed_adversaries_is_uniform_in_simulation() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let mut counts = vec![0u64; 101];
    for _ in 0..50_000 {
        let x = morra_combine(&[S::new(100), S::random(&mut rng), S::new(42)]).unwrap();
        counts[x.value() as usize] += 1;
    }
    assert!(common::uniform_p(&counts) > 0.001);
}

/// Commits to a fixed value in every slot and reveals it honestly.
struct Constant(PartyId, u64, Option<MorraContribution<ToyQ101>>);

impl MorraContributor<ToyQ101> for Constant {
    fn party(&self) -> PartyId {
        self.0
    }

    fn commit(
        &mut self,
        pp: &PublicParams<ToyQ101>,
        shape: &[usize],
        _: &[MorraCommit<ToyQ101>],
        rng: &mut dyn RngCore,
    ) -> Option<MorraCommit<ToyQ101>> {
        let mut secret = MorraContribution::sample(self.0, shape, rng);
        for row in secret.values.iter_mut() {
            row.iter_mut().for_each(|v| *v = S::new(self.1));
        }
        let msg = secret.commit_message(pp);
        self.2 = Some(secret);
        Some(msg)
    }

    fn reveal(&mut self, _: &PublicParams<ToyQ101>, _: &[MorraReveal<ToyQ101>]) -> Option<MorraReveal<ToyQ101>> {
        self.2.as_ref().map(|s| s.reveal_message())
    }
}

#[test]
fn coin_frequency_matches_the_exact_threshold_bias() {
    let pp = PublicParams::<ToyQ101>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut honest = HonestContributor::new(PartyId::Verifier);
    let mut fixed = Constant(PartyId::Prover(1), 77, None);
    let mut parties: [&mut dyn MorraContributor<ToyQ101>; 2] = [&mut fixed, &mut honest];
    let (mut zeros, mut total) = (0u64, 0u64);
    for _ in 0..50 {
        let (coins, round) = run_morra(&pp, &mut parties, &[1000], &mut rng).unwrap();
        assert_eq!(round.reveal_order(), vec![PartyId::Verifier, PartyId::Prover(1)]);
        zeros += coins[0].bits.iter().filter(|&&b| b == 0).count() as u64;
        total += 1000;
    }
    let p0 = 52.0 / 101.0;
    let sd = (total as f64 * p0 * (1.0 - p0)).sqrt();
    assert!((zeros as f64 - total as f64 * p0).abs() < 4.0 * sd, "{zeros}/{total}");
}

#[test]
fn honest_batched_round_yields_requested_shape() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let mut a = HonestContributor::new(PartyId::Prover(1));
    let mut b = HonestContributor::new(PartyId::Prover(2));
    let mut v = HonestContributor::new(PartyId::Verifier);
    let mut parties: [&mut dyn MorraContributor<ToyGroup61>; 3] = [&mut a, &mut b, &mut v];
    let (coins, round) = run_morra(&pp, &mut parties, &[64, 64, 64], &mut rng).unwrap();
    assert_eq!(coins.len(), 3);
    assert!(coins.iter().all(|c| c.bits.len() == 64));
    let mut order = round.commit_order();
    order.reverse();
    assert_eq!(round.reveal_order(), order);
}

#[test]
fn reveals_out_of_reverse_order_are_blamed() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let parties = vec![PartyId::Prover(1), PartyId::Verifier];
    let mut round = MorraRound::<ToyGroup61>::new(parties.clone(), vec![4]);
    let secrets: Vec<_> = parties
        .iter()
        .map(|&p| MorraContribution::<ToyGroup61>::sample(p, &[4], &mut rng))
        .collect();
    for s in &secrets {
        round.on_commit(s.commit_message(&pp)).unwrap();
    }
    // The first committer tries to reveal first.
    let err = round.on_reveal(&pp, secrets[0].reveal_message()).unwrap_err();
    assert_eq!(err.blamed(), Some(PartyId::Prover(1)));
    assert!(matches!(
        err,
        MorraError::AbortWithBlame {
            fault: MorraFault::RevealOutOfOrder,
            ..
        }
    ));
}

#[test]
fn toy61_threshold_is_half_up_to_one_part_in_q() {
    type T = <ToyGroup61 as PrimeGroup>::Scalar;
    let half = T::from_u64((1_152_921_504_606_845_789u64).div_ceil(2));
    assert_eq!(scalar_to_bit(&half), 0);
    assert_eq!(scalar_to_bit(&(half + T::one())), 1);
    assert_eq!(scalar_to_bit(&-T::one()), 1);
}
