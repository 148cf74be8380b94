//! Per-phase wall-clock benchmarks.
//!
//! Phases match the usual cost breakdown of the protocol: bit proofs
//! (`sigma_prove`), their verification (`sigma_verify`), coin flipping
//! (`morra`), summing client shares and commitments (`aggregate`), and the
//! verifier's final equation (`check`).

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vdp_core::dp_params::PrivacyParams;
use vdp_core::group::{Commitment, GroupId, PrimeGroup, PublicParams, ScalarField};
use vdp_core::morra::{MorraContribution, MorraRound};
use vdp_core::protocol::{
    aggregate, bit_context, prover_init, verifier_check_prover, verifier_update_commitments, ProverOutput,
    SessionSetup,
};
use vdp_core::sigma_or::verify_bit;
use vdp_core::with_group;

use crate::stats::mean_std;

pub const PHASES: [&str; 5] = ["sigma_prove", "sigma_verify", "morra", "aggregate", "check"];
pub const CSV_HEADER: &str = "phase,n,n_b,M,K,mean_ms,std_ms,reps";

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BenchConfig {
    pub group: GroupId,
    pub provers: u32,
    pub clients: u64,
    pub bins: u32,
    pub coins: u64,
    pub reps: usize,
    /// Stops adding repetitions once this much time has been spent on a
    /// configuration (at least one repetition always runs).
    pub budget: Option<Duration>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            group: GroupId::Ristretto255,
            provers: 1,
            clients: 1000,
            bins: 1,
            coins: 1024,
            reps: 5,
            budget: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BenchRow {
    pub phase: String,
    pub n: u64,
    pub n_b: u64,
    pub m: u32,
    pub k: u32,
    pub mean_ms: f64,
    pub std_ms: f64,
    /// Fastest repetition; least disturbed by other load on the host.
    #[serde(default)]
    pub min_ms: f64,
    pub reps: usize,
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.3},{:.3},{}",
            r.phase, r.n, r.n_b, r.m, r.k, r.mean_ms, r.std_ms, r.reps
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Coins,
    Clients,
    Bins,
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coins" => Ok(Sweep::Coins),
            "clients" => Ok(Sweep::Clients),
            "bins" => Ok(Sweep::Bins),
            _ => Err(format!("unknown sweep `{s}` (expected coins, clients or bins)")),
        }
    }
}

impl Sweep {
    /// Configurations of the sweep around `base`.
    pub fn configs(&self, base: &BenchConfig) -> Vec<BenchConfig> {
        match self {
            Sweep::Coins => (10..=14)
                .map(|e| BenchConfig {
                    coins: 1 << e,
                    ..base.clone()
                })
                .collect(),
            Sweep::Clients => [1_000u64, 10_000, 100_000]
                .into_iter()
                .map(|n| BenchConfig {
                    clients: n,
                    ..base.clone()
                })
                .collect(),
            Sweep::Bins => [1u32, 2, 4, 8]
                .into_iter()
                .map(|m| BenchConfig { bins: m, ..base.clone() })
                .collect(),
        }
    }
}

pub fn run_sweep(sweep: Sweep, base: &BenchConfig) -> Vec<BenchRow> {
    sweep.configs(base).iter().flat_map(run_benchmark).collect()
}

/// One row per phase, timings over `reps` repetitions.
pub fn run_benchmark(cfg: &BenchConfig) -> Vec<BenchRow> {
    with_group!(cfg.group, G => bench_typed::<G>(cfg))
}

/// Private client data as one prover sees it, plus the public commitments.
struct ClientData<G: PrimeGroup> {
    /// `[k][bin][i]`
    shares: Vec<Vec<Vec<G::Scalar>>>,
    randomness: Vec<Vec<Vec<G::Scalar>>>,
    commitments: Vec<Vec<Vec<Commitment<G>>>>,
}

fn client_data<G: PrimeGroup>(pp: &PublicParams<G>, cfg: &BenchConfig, rng: &mut ChaCha20Rng) -> ClientData<G> {
    let mut data = ClientData {
        shares: Vec::new(),
        randomness: Vec::new(),
        commitments: Vec::new(),
    };
    for _ in 0..cfg.provers {
        let (mut s, mut r, mut c) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..cfg.bins {
            let shares: Vec<G::Scalar> = (0..cfg.clients).map(|_| G::Scalar::random(rng)).collect();
            let rand: Vec<G::Scalar> = (0..cfg.clients).map(|_| G::Scalar::random(rng)).collect();
            c.push(shares.iter().zip(&rand).map(|(x, r)| pp.commit(x, r)).collect());
            s.push(shares);
            r.push(rand);
        }
        data.shares.push(s);
        data.randomness.push(r);
        data.commitments.push(c);
    }
    data
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn bench_typed<G: PrimeGroup>(cfg: &BenchConfig) -> Vec<BenchRow> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let pp = PublicParams::<G>::standard();
    let setup = SessionSetup {
        session_id: b"bench".to_vec(),
        provers: cfg.provers,
        bins: cfg.bins,
        privacy: PrivacyParams::from_coins(cfg.coins, 1.0 / 1024.0).expect("bench needs n_b > 30"),
    };
    let data = client_data(&pp, cfg, &mut rng);
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); PHASES.len()];
    let started = Instant::now();

    for rep in 0..cfg.reps.max(1) {
        if rep > 0 && cfg.budget.is_some_and(|b| started.elapsed() >= b) {
            break;
        }
        let mut t = [Duration::ZERO; 5];

        let clock = Instant::now();
        let inits: Vec<_> = (1..=cfg.provers)
            .map(|k| prover_init(&pp, &setup, k, &[], &mut rng).expect("valid setup"))
            .collect();
        t[0] = clock.elapsed();

        let clock = Instant::now();
        for (_, msg) in &inits {
            for (bin, (cs, ps)) in msg.commitments.iter().zip(&msg.proofs).enumerate() {
                for (j, (c, p)) in cs.iter().zip(ps).enumerate() {
                    let ctx = bit_context(&setup, msg.prover, bin as u32, j as u64);
                    assert!(verify_bit(&pp, c, p, &ctx));
                }
            }
        }
        t[1] = clock.elapsed();

        let clock = Instant::now();
        let mut round = MorraRound::<G>::new(setup.morra_participants(), setup.morra_shape());
        let secrets: Vec<_> = setup
            .morra_participants()
            .into_iter()
            .map(|p| MorraContribution::<G>::sample(p, &setup.morra_shape(), &mut rng as &mut dyn RngCore))
            .collect();
        for s in &secrets {
            round.on_commit(s.commit_message(&pp)).expect("honest commit");
        }
        let mut coins = None;
        for s in secrets.iter().rev() {
            coins = round.on_reveal(&pp, s.reveal_message()).expect("honest reveal");
        }
        let coins = coins.expect("round complete");
        t[2] = clock.elapsed();

        // Prover share sums and the verifier's per-prover client product.
        let clock = Instant::now();
        let mut sums = Vec::with_capacity(cfg.provers as usize);
        let mut products = Vec::with_capacity(cfg.provers as usize);
        for k in 0..cfg.provers as usize {
            let mut s = Vec::new();
            let mut p = Vec::new();
            for bin in 0..cfg.bins as usize {
                let ys = data.shares[k][bin].iter().fold(G::Scalar::zero(), |a, x| a + *x);
                let zs = data.randomness[k][bin].iter().fold(G::Scalar::zero(), |a, x| a + *x);
                s.push((ys, zs));
                p.push(Commitment::product(&data.commitments[k][bin]));
            }
            sums.push(s);
            products.push(p);
        }
        black_box(&products);
        t[3] = clock.elapsed();

        let (states, msgs): (Vec<_>, Vec<_>) = inits.into_iter().unzip();
        let mut outputs = Vec::with_capacity(states.len());
        for mut state in states {
            let k = state.prover();
            let mine: Vec<_> = (0..cfg.bins).map(|b| &coins[setup.coin_batch(k, b)]).collect();
            let noise = state.adjust_and_output(&mine).expect("fresh state");
            let (y, z) = noise
                .y
                .iter()
                .zip(&noise.z)
                .zip(&sums[k as usize - 1])
                .map(|((y, z), (ys, zs))| (*y + *ys, *z + *zs))
                .unzip();
            outputs.push(ProverOutput::<G> { prover: k, y, z });
        }

        let clock = Instant::now();
        for (msg, out) in msgs.iter().zip(&outputs) {
            let k = out.prover as usize;
            for bin in 0..cfg.bins as usize {
                let b = &coins[setup.coin_batch(out.prover, bin as u32)].bits;
                let updated: Vec<_> = msg.commitments[bin]
                    .iter()
                    .zip(b)
                    .map(|(c, &bit)| verifier_update_commitments(&pp, c, bit))
                    .collect();
                assert!(verifier_check_prover(&pp, &products[k - 1][bin], &updated, &out.y[bin], &out.z[bin]));
            }
        }
        let agg = aggregate(&outputs.iter().cloned().map(Some).collect::<Vec<_>>(), &setup);
        black_box(&agg);
        t[4] = clock.elapsed();

        for (s, d) in samples.iter_mut().zip(t) {
            s.push(ms(d));
        }
    }

    PHASES
        .iter()
        .zip(&samples)
        .map(|(phase, xs)| {
            let (mean_ms, std_ms) = mean_std(xs);
            let min_ms = xs.iter().copied().fold(f64::INFINITY, f64::min);
            BenchRow {
                phase: phase.to_string(),
                n: cfg.clients,
                n_b: cfg.coins,
                m: cfg.bins,
                k: cfg.provers,
                mean_ms,
                std_ms,
                min_ms,
                reps: xs.len(),
            }
        })
        .collect()
}

/// Microseconds per variable-base exponentiation with a random exponent.
pub fn exponentiation_micros(group: GroupId, iters: u32) -> f64 {
    with_group!(group, G => exp_typed::<G>(iters))
}

fn exp_typed<G: PrimeGroup>(iters: u32) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let pp = PublicParams::<G>::standard();
    let mut base = G::pow(pp.h(), &G::Scalar::random(&mut rng));
    let exps: Vec<G::Scalar> = (0..iters).map(|_| G::Scalar::random(&mut rng)).collect();
    let clock = Instant::now();
    for e in &exps {
        base = G::pow(&base, e);
    }
    black_box(base);
    clock.elapsed().as_secs_f64() * 1e6 / iters.max(1) as f64
}
