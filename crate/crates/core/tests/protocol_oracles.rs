mod common;

use base64::Engine as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{Binomial, Discrete};
use vdp_core::dp_params::ideal_mechanism;
use vdp_core::group::{PrimeGroup, PublicParams, Ristretto255, ScalarField, ToyGroup61};
use vdp_core::protocol::SessionOutcome;
use vdp_core::transcript::verify_session;

type S61 = <ToyGroup61 as PrimeGroup>::Scalar;

fn random_inputs(n: usize, bins: u32, rng: &mut impl Rng) -> Vec<Vec<u64>> {
    (0..n)
        .map(|_| {
            if bins == 1 {
                vec![rng.random_range(0..2)]
            } else {
                let hot = rng.random_range(0..bins);
                (0..bins).map(|j| (j == hot) as u64).collect()
            }
        })
        .collect()
}

#[test]
fn randomized_honest_sessions_accept_and_reverify() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(40);
    for _ in 0..150 {
        let k = rng.random_range(1..=3);
        let n = rng.random_range(0..=40);
        let coins = rng.random_range(31..=200);
        let bins = if rng.random_bool(0.2) { rng.random_range(2..=4) } else { 1 };
        let setup = common::setup(k, bins, coins, &mut rng);
        let inputs = random_inputs(n, bins, &mut rng);
        let run = common::run_honest(&pp, &setup, &inputs, &mut rng);
        let SessionOutcome::Accepted { aggregates, excluded_clients } = &run.outcome else {
            panic!("honest session rejected: {:?}", run.outcome);
        };
        assert!(excluded_clients.is_empty());
        for (bin, a) in aggregates.iter().enumerate() {
            let truth: i64 = inputs.iter().map(|x| x[bin] as i64).sum();
            let noise: i128 = run.noise.iter().map(|per| per[bin]).sum();
            assert!((0..=(k as i128 * coins as i128)).contains(&noise));
            assert_eq!(a.estimate as i128, truth as i128 + noise - (k as i128 * coins as i128) / 2);
        }
        assert!(verify_session(&run.transcript).unwrap().is_accepted());
    }
}

#[test]
fn production_group_session_accepts() {
    let pp = PublicParams::<Ristretto255>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    let setup = common::setup(2, 2, 40, &mut rng);
    let inputs = random_inputs(6, 2, &mut rng);
    let run = common::run_honest(&pp, &setup, &inputs, &mut rng);
    assert!(run.outcome.is_accepted());
    assert!(verify_session(&run.transcript).unwrap().is_accepted());
}

#[test]
fn protocol_noise_matches_the_ideal_mechanism() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let sessions = 10_000;
    let coins = 64;
    let mut real = Vec::with_capacity(sessions);
    let mut ideal = Vec::with_capacity(sessions);
    for _ in 0..sessions {
        let setup = common::setup(2, 1, coins, &mut rng);
        let run = common::run_honest(&pp, &setup, &[], &mut rng);
        real.push(run.noise.iter().map(|n| n[0]).sum::<i128>() as i64);
        let out = ideal_mechanism::<ToyGroup61, _>(&[S61::zero(), S61::zero()], coins, &mut rng).unwrap();
        ideal.push(out.y.to_centered_i128().unwrap() as i64);
    }
    let p = common::two_sample_p(&real, &ideal);
    assert!(p > 0.01, "p={p}");
}

#[test]
fn all_ones_estimates_center_on_the_count() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(43);
    let (sessions, n, coins) = (1000, 100, 48u64);
    let inputs = vec![vec![1u64]; n];
    let mut sum = 0.0;
    let mut abs_err = 0.0;
    for _ in 0..sessions {
        let setup = common::setup(2, 1, coins, &mut rng);
        let run = common::run_honest(&pp, &setup, &inputs, &mut rng);
        let SessionOutcome::Accepted { aggregates, .. } = &run.outcome else { panic!() };
        sum += aggregates[0].estimate as f64;
        abs_err += (aggregates[0].estimate - n as i64).abs() as f64;
    }
    let sd = (2.0 * coins as f64 / 4.0).sqrt();
    let mean = sum / sessions as f64;
    assert!((mean - n as f64).abs() < 3.0 * sd / (sessions as f64).sqrt(), "{mean}");

    // E|Bin(2n_b, 1/2) - n_b| computed exactly from the pmf.
    let dist = Binomial::new(0.5, 2 * coins).unwrap();
    let expected: f64 = (0..=2 * coins).map(|k| dist.pmf(k) * (k as f64 - coins as f64).abs()).sum();
    let mean_abs = abs_err / sessions as f64;
    // |Z| has variance E Z² - (E|Z|)² = n_b/2 - expected².
    let sd_abs = ((coins as f64 / 2.0 - expected * expected) / sessions as f64).sqrt();
    assert!((mean_abs - expected).abs() < 3.0 * sd_abs, "{mean_abs} vs {expected}");
}

#[test]
fn no_message_carries_a_bit_opening() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(44);
    let setup = common::setup(2, 2, 64, &mut rng);
    let inputs = random_inputs(5, 2, &mut rng);
    let run = common::run_honest(&pp, &setup, &inputs, &mut rng);
    let bodies: Vec<Vec<u8>> = run
        .transcript
        .messages
        .iter()
        .map(|m| base64::engine::general_purpose::STANDARD.decode(&m.body).unwrap())
        .collect();
    let json = run.transcript.to_json();
    for state in &run.states {
        let (_, randomness) = state.secret_openings();
        for s in randomness.iter().flatten() {
            for needle in [s.encode(), (-*s).encode()] {
                assert!(
                    !bodies.iter().any(|b| b.windows(needle.len()).any(|w| w == needle.as_slice())),
                    "prover {} leaked bit randomness",
                    state.prover()
                );
                let text = base64::engine::general_purpose::STANDARD.encode(&needle);
                assert!(!json.contains(&text));
            }
        }
    }
}

#[test]
fn different_randomness_gives_different_bit_commitments() {
    let pp = PublicParams::<ToyGroup61>::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(45);
    let setup = common::setup(1, 1, 40, &mut rng);
    let a = common::run_honest(&pp, &setup, &[], &mut rng);
    let b = common::run_honest(&pp, &setup, &[], &mut rng);
    let bits = |t: &vdp_core::transcript::SessionTranscript| t.messages[0].body.clone();
    assert_ne!(bits(&a.transcript), bits(&b.transcript));
}
