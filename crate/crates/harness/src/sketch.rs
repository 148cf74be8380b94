//! Toy sketch-based validation in the style of secret-shared aggregation
//! systems with Beaver-triple validity checks.
//!
//! Only here as a contrast target: the two server-side attacks that the
//! verifiable protocol catches go through unnoticed against this baseline.
//! Never use it for anything else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// 2^61 - 1.
pub const P: u64 = (1 << 61) - 1;

fn add(a: u64, b: u64) -> u64 {
    ((a as u128 + b as u128) % P as u128) as u64
}

fn sub(a: u64, b: u64) -> u64 {
    add(a, P - b % P)
}

fn mul(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn split(x: u64, n: usize, rng: &mut ChaCha20Rng) -> Vec<u64> {
    let mut out: Vec<u64> = (1..n).map(|_| rng.random_range(0..P)).collect();
    let rest = out.iter().fold(x % P, |acc, s| sub(acc, *s));
    out.insert(0, rest);
    out
}

/// One server's view of one client: shares of `x` and of a triple `c = a·b`.
#[derive(Clone, Copy, Debug)]
struct Share {
    x: u64,
    a: u64,
    b: u64,
    c: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SketchAttack {
    /// A server leaves this client's share out of its aggregate.
    DropInput { server: usize, client: usize },
    /// The client tells a server its input; the server shifts its share of
    /// `x(x-1)` so the sum still comes out zero.
    CancelCheck { server: usize, client: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SketchOutcome {
    pub accepted: Vec<bool>,
    pub sum: u64,
    /// Sum of the inputs the check accepted.
    pub expected_sum: u64,
}

/// Runs the baseline with clients holding `inputs` (meant to be bits).
pub fn run_sketch(inputs: &[u64], servers: usize, attack: Option<SketchAttack>, seed: u64) -> SketchOutcome {
    assert!(servers >= 2, "the baseline needs at least two servers");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let views: Vec<Vec<Share>> = inputs
        .iter()
        .map(|&x| {
            let (a, b) = (rng.random_range(0..P), rng.random_range(0..P));
            let xs = split(x, servers, &mut rng);
            let as_ = split(a, servers, &mut rng);
            let bs = split(b, servers, &mut rng);
            let cs = split(mul(a, b), servers, &mut rng);
            (0..servers)
                .map(|k| Share {
                    x: xs[k],
                    a: as_[k],
                    b: bs[k],
                    c: cs[k],
                })
                .collect()
        })
        .collect();

    let mut accepted = Vec::with_capacity(inputs.len());
    for (i, view) in views.iter().enumerate() {
        // Beaver multiplication of u = x and v = x - 1.
        let u: Vec<u64> = view.iter().map(|s| s.x).collect();
        let v: Vec<u64> = view
            .iter()
            .enumerate()
            .map(|(k, s)| if k == 0 { sub(s.x, 1) } else { s.x })
            .collect();
        let d = (0..servers).fold(0, |acc, k| add(acc, sub(u[k], view[k].a)));
        let e = (0..servers).fold(0, |acc, k| add(acc, sub(v[k], view[k].b)));
        let mut total = 0;
        for (k, s) in view.iter().enumerate() {
            let mut w = add(add(mul(d, s.b), mul(e, s.a)), s.c);
            if k == 0 {
                w = add(w, mul(d, e));
            }
            if let Some(SketchAttack::CancelCheck { server, client }) = attack {
                if server == k && client == i {
                    let x = inputs[i] % P;
                    w = sub(w, mul(x, sub(x, 1)));
                }
            }
            total = add(total, w);
        }
        accepted.push(total == 0);
    }

    let mut sum = 0;
    for k in 0..servers {
        for (i, view) in views.iter().enumerate() {
            if !accepted[i] || attack == Some(SketchAttack::DropInput { server: k, client: i }) {
                continue;
            }
            sum = add(sum, view[k].x);
        }
    }
    let expected_sum = inputs
        .iter()
        .zip(&accepted)
        .filter(|(_, &a)| a)
        .fold(0, |acc, (x, _)| add(acc, *x));
    SketchOutcome {
        accepted,
        sum,
        expected_sum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_servers_reject_nonbits() {
        let out = run_sketch(&[1, 0, 2, 1], 2, None, 1);
        assert_eq!(out.accepted, vec![true, true, false, true]);
        assert_eq!(out.sum, 2);
        assert_eq!(out.sum, out.expected_sum);
    }

    #[test]
    fn dropped_input_goes_unnoticed() {
        let attack = SketchAttack::DropInput { server: 1, client: 0 };
        let out = run_sketch(&[1, 1, 0], 3, Some(attack), 2);
        assert!(out.accepted.iter().all(|&a| a));
        assert_ne!(out.sum, out.expected_sum);
    }

    #[test]
    fn collusion_sneaks_in_an_illegal_input() {
        let attack = SketchAttack::CancelCheck { server: 1, client: 2 };
        let out = run_sketch(&[1, 0, 2], 2, Some(attack), 3);
        assert!(out.accepted[2]);
        assert_eq!(out.sum, 3);
    }
}
