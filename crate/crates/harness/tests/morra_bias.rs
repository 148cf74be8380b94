use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vdp_core::group::{PublicParams, ToyGroup61};
use vdp_core::morra::{run_morra, HonestContributor, MorraContributor};
use vdp_core::party::PartyId;
use vdp_harness::adversary::AdaptiveContributor;

// An adaptive last committer sees every other commitment but, by hiding,
// learns nothing about the values behind them. Its coins stay fair.
#[test]
fn adaptive_committer_cannot_bias_coins() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let rounds = 10_000u64;
    let mut ones = 0u64;
    for _ in 0..rounds {
        let mut honest = HonestContributor::<ToyGroup61>::new(PartyId::Prover(1));
        let mut adaptive = AdaptiveContributor::<ToyGroup61>::new(PartyId::Verifier);
        let mut parties: [&mut dyn MorraContributor<ToyGroup61>; 2] = [&mut honest, &mut adaptive];
        let (coins, _) = run_morra(&pp, &mut parties, &[1], &mut rng).unwrap();
        ones += coins[0].bits[0] as u64;
    }
    let mean = rounds as f64 / 2.0;
    let sigma = (rounds as f64 / 4.0).sqrt();
    assert!((ones as f64 - mean).abs() <= 3.0 * sigma, "{ones} ones in {rounds}");
}
