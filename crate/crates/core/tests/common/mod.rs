//! Drives whole sessions directly on the library, keeping the private state
//! that a real deployment would never expose.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use vdp_core::dp_params::PrivacyParams;
use vdp_core::group::{PrimeGroup, PublicParams, ScalarField};
use vdp_core::morra::MorraContribution;
use vdp_core::protocol::{prover_init, Message, ProverState, SessionOutcome, SessionSetup, Verifier};
use vdp_core::shares::{build_client_submission, ClientSubmission};
use vdp_core::transcript::{SessionTranscript, TranscriptLog};

pub struct Run<G: PrimeGroup> {
    pub transcript: SessionTranscript,
    pub outcome: SessionOutcome<G::Scalar>,
    pub states: Vec<ProverState<G>>,
    pub submissions: Vec<ClientSubmission<G>>,
    /// `noise[k][bin]`: `y_k` minus prover k's share sum, lifted to an integer.
    pub noise: Vec<Vec<i128>>,
}

pub fn setup(provers: u32, bins: u32, coins: u64, rng: &mut impl RngCore) -> SessionSetup {
    let mut sid = vec![0u8; 16];
    rng.fill_bytes(&mut sid);
    SessionSetup {
        session_id: sid,
        provers,
        bins,
        privacy: PrivacyParams::from_coins(coins, 1.0 / 1024.0).unwrap(),
    }
}

/// Honest session over the given inputs; every message passes through the
/// live verifier and the transcript log.
pub fn run_honest<G: PrimeGroup, R: Rng>(
    pp: &PublicParams<G>,
    setup: &SessionSetup,
    inputs: &[Vec<u64>],
    rng: &mut R,
) -> Run<G> {
    let mut judge = Verifier::new(pp.clone(), setup.clone());
    let mut log = TranscriptLog::new(pp.clone(), setup.clone());
    let mut send = |judge: &mut Verifier<G>, msg: Message<G>| {
        log.record(&msg);
        judge.handle(msg).expect("honest message accepted");
    };
    let k_total = setup.provers as usize;

    let submissions: Vec<ClientSubmission<G>> = inputs
        .iter()
        .enumerate()
        .map(|(i, x)| build_client_submission(pp, &setup.session_id, i as u64, x, k_total, rng).unwrap())
        .collect();
    for s in &submissions {
        send(&mut judge, Message::Client(s.broadcast.clone()));
    }

    let mut states = Vec::new();
    for k in 1..=setup.provers {
        let payloads: Vec<_> = submissions.iter().map(|s| &s.payloads[k as usize - 1]).collect();
        let (state, msg) = prover_init(pp, setup, k, &payloads, rng).unwrap();
        states.push(state);
        send(&mut judge, Message::BitCommit(msg));
    }

    let shape = setup.morra_shape();
    let secrets: Vec<MorraContribution<G>> = setup
        .morra_participants()
        .into_iter()
        .map(|p| MorraContribution::sample(p, &shape, rng as &mut dyn RngCore))
        .collect();
    for s in &secrets {
        send(&mut judge, Message::MorraCommit(s.commit_message(pp)));
    }
    for s in secrets.iter().rev() {
        send(&mut judge, Message::MorraReveal(s.reveal_message()));
    }

    let mut noise = Vec::new();
    for state in states.iter_mut() {
        let k = state.prover();
        let coins = judge.coins_for(k).unwrap();
        let out = state.adjust_and_output(&coins).unwrap();
        let per_bin = (0..setup.bins as usize)
            .map(|bin| {
                let shares = submissions
                    .iter()
                    .fold(G::Scalar::zero(), |a, s| a + s.payloads[k as usize - 1].shares[bin]);
                (out.y[bin] - shares).to_centered_i128().unwrap()
            })
            .collect();
        noise.push(per_bin);
        send(&mut judge, Message::Output(out));
    }
    let outcome = judge.finish();
    let transcript = log.finish(judge.client_verdicts(), &outcome);
    Run {
        transcript,
        outcome,
        states,
        submissions,
        noise,
    }
}

/// χ² goodness of fit against cell probabilities; cells with expected
/// count below 5 are pooled with their neighbours.
pub fn chi_square_p(observed: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut cur = (0.0, 0.0);
    for (o, p) in observed.iter().zip(probs) {
        cur.0 += *o as f64;
        cur.1 += p * n as f64;
        if cur.1 >= 5.0 {
            cells.push(cur);
            cur = (0.0, 0.0);
        }
    }
    if cur.1 > 0.0 || cur.0 > 0.0 {
        let last = cells.last_mut().expect("some cell reaches 5");
        last.0 += cur.0;
        last.1 += cur.1;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = (cells.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

pub fn uniform_p(observed: &[u64]) -> f64 {
    let p = 1.0 / observed.len() as f64;
    chi_square_p(observed, &vec![p; observed.len()])
}

/// Two-sample χ² homogeneity p-value for integer samples.
pub fn two_sample_p(a: &[i64], b: &[i64]) -> f64 {
    let mut table: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for &x in a {
        table.entry(x).or_default().0 += 1.0;
    }
    for &x in b {
        table.entry(x).or_default().1 += 1.0;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut cur = (0.0, 0.0);
    for (_, (ca, cb)) in table {
        cur.0 += ca;
        cur.1 += cb;
        if cur.0 + cur.1 >= 10.0 {
            cells.push(cur);
            cur = (0.0, 0.0);
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += cur.0;
        last.1 += cur.1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let stat: f64 = cells
        .iter()
        .map(|(ca, cb)| {
            let t = ca + cb;
            let (ea, eb) = (t * na / (na + nb), t * nb / (na + nb));
            (ca - ea).powi(2) / ea + (cb - eb).powi(2) / eb
        })
        .sum();
    let df = (cells.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}
