//! Deterministic in-process session runner.
//!
//! All parties live in one thread and talk over an ordered in-memory bus:
//! every message is appended to the transcript log and fed to the verifier
//! before the next party acts. The whole run is a pure function of the
//! config seed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vdp_core::dp_params::check_field_guard;
use vdp_core::group::{PrimeGroup, PublicParams, ScalarField};
use vdp_core::morra::{MorraContributor, MorraCommit, MorraReveal};
use vdp_core::party::PartyId;
use vdp_core::protocol::{prover_init, prover_init_with_bits, Message, SessionSetup, Verifier};
use vdp_core::shares::{build_client_submission, build_unchecked, ClientSubmission, ProverPayload};
use vdp_core::transcript::{OutcomeRecord, SessionTranscript, TranscriptLog};
use vdp_core::with_group;

use crate::adversary::{morra_party, AdversarySpec, Behavior};
use crate::config::{ConfigError, SessionConfig};

#[derive(Clone, Debug)]
pub struct SessionResult {
    pub transcript: SessionTranscript,
    /// Sum of the accepted clients' inputs, per bin.
    pub true_counts: Vec<u64>,
}

impl SessionResult {
    pub fn outcome(&self) -> &OutcomeRecord {
        &self.transcript.outcome
    }

    pub fn is_accepted(&self) -> bool {
        self.outcome().rejection().is_none()
    }

    /// Total noise `Σ_k Δ_k` per bin of an accepted session, recovered from
    /// the centered estimate.
    pub fn noise(&self) -> Option<Vec<i64>> {
        let setup = &self.transcript.setup;
        let offset = (setup.provers as i64 * setup.coins() as i64) / 2;
        let estimates = self.outcome().estimates()?;
        Some(
            estimates
                .iter()
                .zip(&self.true_counts)
                .map(|(e, &t)| e + offset - t as i64)
                .collect(),
        )
    }
}

struct Bus<G: PrimeGroup> {
    judge: Verifier<G>,
    log: TranscriptLog<G>,
}

impl<G: PrimeGroup> Bus<G> {
    /// Broadcasts a message; `false` once the session has aborted.
    fn deliver(&mut self, msg: Message<G>) -> bool {
        self.log.record(&msg);
        self.judge.handle(msg).is_ok()
    }
}

/// Runs one session. Parties without an entry in `adversaries` are honest.
pub fn run_session(config: &SessionConfig, adversaries: &[AdversarySpec]) -> Result<SessionResult, ConfigError> {
    config.validate()?;
    for a in adversaries {
        a.validate()?;
    }
    with_group!(config.group, G => run_typed::<G>(config, adversaries))
}

fn illegal_input<S: ScalarField>(bins: u32) -> Vec<S> {
    if bins == 1 {
        vec![S::from_u64(2)]
    } else {
        (0..bins).map(|j| if j < 2 { S::one() } else { S::zero() }).collect()
    }
}

fn run_typed<G: PrimeGroup>(cfg: &SessionConfig, adversaries: &[AdversarySpec]) -> Result<SessionResult, ConfigError> {
    let behavior_of = |p: PartyId| {
        adversaries
            .iter()
            .find(|a| a.party == p)
            .map_or(Behavior::Honest, |a| a.behavior)
    };
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut sid = [0u8; 16];
    rng.fill_bytes(&mut sid);
    let setup = SessionSetup {
        session_id: sid.to_vec(),
        provers: cfg.provers,
        bins: cfg.bins,
        privacy: cfg.privacy,
    };
    check_field_guard::<G>(cfg.clients, cfg.provers as u64, setup.coins())?;
    let pp = PublicParams::<G>::standard();
    let mut bus = Bus {
        judge: Verifier::new(pp.clone(), setup.clone()).with_batch_verification(cfg.batch_verify),
        log: TranscriptLog::new(pp.clone(), setup.clone()),
    };
    let k_total = cfg.provers as usize;

    // Clients broadcast commitments and validity proofs.
    let mut clients: Vec<(Vec<u64>, ClientSubmission<G>)> = Vec::with_capacity(cfg.clients as usize);
    for i in 0..cfg.clients {
        let input = cfg.inputs.input(i as usize, cfg.bins, &mut rng)?;
        let sub = if behavior_of(PartyId::Client(i)) == Behavior::ColludeIllegalInput {
            build_unchecked(&pp, &setup.session_id, i, &illegal_input(cfg.bins), k_total, &mut rng)
        } else {
            build_client_submission(&pp, &setup.session_id, i, &input, k_total, &mut rng)
                .map_err(|e| ConfigError::Inputs(format!("client {i}: {e}")))?
        };
        bus.deliver(Message::Client(sub.broadcast.clone()));
        clients.push((input, sub));
    }
    let accepted: Vec<bool> = bus
        .judge
        .client_verdicts()
        .iter()
        .map(|(_, v)| v.is_accepted())
        .collect();
    let mut true_counts = vec![0u64; cfg.bins as usize];
    for ((input, _), _) in clients.iter().zip(&accepted).filter(|(_, &a)| a) {
        for (t, x) in true_counts.iter_mut().zip(input) {
            *t += x;
        }
    }

    let result = |bus: Bus<G>, true_counts: Vec<u64>| {
        let mut judge = bus.judge;
        let outcome = judge.finish();
        SessionResult {
            transcript: bus.log.finish(judge.client_verdicts(), &outcome),
            true_counts,
        }
    };

    // Provers commit to their noise bits.
    let mut states = Vec::with_capacity(k_total);
    for k in 1..=cfg.provers {
        let behavior = behavior_of(PartyId::Prover(k));
        let payloads: Vec<&ProverPayload<G>> = clients
            .iter()
            .zip(&accepted)
            .filter(|((_, sub), &ok)| ok && behavior != Behavior::ExcludeClient(sub.broadcast.client_id))
            .map(|((_, sub), _)| &sub.payloads[k as usize - 1])
            .collect();
        let (state, msg) = if behavior == Behavior::NonbitCommitment {
            let mut bits: Vec<Vec<G::Scalar>> = (0..cfg.bins)
                .map(|_| {
                    (0..setup.coins())
                        .map(|_| G::Scalar::from_u64(rng.random_range(0..2)))
                        .collect()
                })
                .collect();
            bits[0][0] = G::Scalar::from_u64(2);
            prover_init_with_bits(&pp, &setup, k, &payloads, bits, &mut rng)
        } else {
            prover_init(&pp, &setup, k, &payloads, &mut rng)
        }
        .expect("shapes follow the setup");
        states.push(state);
        if !bus.deliver(Message::BitCommit(msg)) {
            return Ok(result(bus, true_counts));
        }
    }

    // Morra: adaptive parties commit last; reveals run in reverse.
    let mut parties: Vec<Box<dyn MorraContributor<G>>> = setup
        .morra_participants()
        .into_iter()
        .map(|p| morra_party::<G>(p, behavior_of(p)))
        .collect();
    parties.sort_by_key(|p| behavior_of(p.party()) == Behavior::MorraAdaptive);
    let shape = setup.morra_shape();
    let mut commits: Vec<MorraCommit<G>> = Vec::with_capacity(parties.len());
    for p in parties.iter_mut() {
        let Some(msg) = p.commit(&pp, &shape, &commits, &mut rng) else {
            return Ok(result(bus, true_counts));
        };
        commits.push(msg.clone());
        if !bus.deliver(Message::MorraCommit(msg)) {
            return Ok(result(bus, true_counts));
        }
    }
    let mut reveals: Vec<MorraReveal<G>> = Vec::with_capacity(parties.len());
    for p in parties.iter_mut().rev() {
        let Some(msg) = p.reveal(&pp, &reveals) else {
            return Ok(result(bus, true_counts));
        };
        reveals.push(msg.clone());
        if !bus.deliver(Message::MorraReveal(msg)) {
            return Ok(result(bus, true_counts));
        }
    }

    // Provers apply the coins and publish their outputs.
    for state in states.iter_mut() {
        let k = state.prover();
        let coins = bus.judge.coins_for(k).expect("coins after a completed round");
        let mut out = state.adjust_and_output(&coins).expect("prover awaiting coins");
        if behavior_of(PartyId::Prover(k)) == Behavior::TamperOutput {
            out.y[0] = out.y[0] + G::Scalar::one();
        }
        if !bus.deliver(Message::Output(out)) {
            break;
        }
    }
    Ok(result(bus, true_counts))
}
