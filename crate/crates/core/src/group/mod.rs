//! Prime-order group abstraction and the Pedersen commitment scheme built on it.
//!
//! Two backends implement [`PrimeGroup`]:
//!
//! * [`Ristretto255`], the production group (about 128-bit security).
//! * [`ModP`], small Schnorr subgroups of `Z_p^*` (`p < 2^62`) used for
//!   exhaustive oracle tests, statistical tests and fast simulation sweeps.
//!
//! Scalar arithmetic is not constant time in the toy backend, and nothing in
//! this crate attempts side-channel hardening. Deployments that care about
//! timing leakage need a hardened backend.

mod commitment;
mod modp;
mod params;
mod ristretto;

use std::fmt::{self, Debug};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use rand::Rng;
use sha2::{Digest, Sha512};

pub use commitment::Commitment;
pub use modp::{ModP, ModPElement, ModPParams, ModQScalar, Q101, Toy16, Toy32, Toy61};
pub use params::{setup, setup_with_domain, PublicParams, DEFAULT_H_DOMAIN, PARAMS_VERSION};
pub use ristretto::Ristretto255;

/// Toy group of order 101 inside `Z_607^*`.
pub type ToyQ101 = ModP<Q101>;
/// Safe-prime group with a 16-bit order.
pub type ToyGroup16 = ModP<Toy16>;
/// Safe-prime group with a 31-bit order.
pub type ToyGroup32 = ModP<Toy32>;
/// Safe-prime group with a 60-bit order, the default simulation backend.
pub type ToyGroup61 = ModP<Toy61>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("unsupported security level {requested} bits for group {group} (max {supported})")]
    UnsupportedSecurityLevel {
        group: GroupId,
        requested: u32,
        supported: u32,
    },
    #[error("unknown group identifier `{0}`")]
    UnknownGroup(String),
    #[error("malformed public parameters: {0}")]
    MalformedParams(&'static str),
}

/// Identifier of a concrete group backend. The byte code is part of every
/// serialized [`PublicParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupId {
    Ristretto255,
    ToyQ101,
    Toy16,
    Toy32,
    Toy61,
}

impl GroupId {
    pub const ALL: [GroupId; 5] = [
        GroupId::Ristretto255,
        GroupId::ToyQ101,
        GroupId::Toy16,
        GroupId::Toy32,
        GroupId::Toy61,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GroupId::Ristretto255 => "ristretto255",
            GroupId::ToyQ101 => "toy-q101",
            GroupId::Toy16 => "toy16",
            GroupId::Toy32 => "toy32",
            GroupId::Toy61 => "toy61",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            GroupId::Ristretto255 => 1,
            GroupId::ToyQ101 => 0x10,
            GroupId::Toy16 => 0x11,
            GroupId::Toy32 => 0x12,
            GroupId::Toy61 => 0x13,
        }
    }

    pub fn from_code(code: u8) -> Option<GroupId> {
        GroupId::ALL.into_iter().find(|g| g.code() == code)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupId {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroupId::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| GroupError::UnknownGroup(s.to_string()))
    }
}

/// Arithmetic in `Z_q`, the exponent field of a [`PrimeGroup`].
pub trait ScalarField:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Length of the canonical little-endian encoding.
    const ENCODED_LEN: usize;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;

    fn from_i64(v: i64) -> Self {
        if v >= 0 {
            Self::from_u64(v as u64)
        } else {
            -Self::from_u64(v.unsigned_abs())
        }
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Reduces 512 uniform bits modulo `q`.
    fn from_wide_bytes(bytes: &[u8; 64]) -> Self;

    /// Multiplicative inverse; `None` for zero.
    fn invert(&self) -> Option<Self>;

    fn encode(&self) -> Vec<u8>;

    /// Decodes a canonical encoding; rejects wrong lengths and values `>= q`.
    fn decode(bytes: &[u8]) -> Option<Self>;

    /// `true` iff the residue, read as an integer in `[0, q)`, is `<= ceil(q/2)`.
    fn at_most_half_order(&self) -> bool;

    /// Lifts the residue to the integer in `(-q/2, q/2]` it represents, or
    /// `None` when that integer does not fit in an `i128`.
    fn to_centered_i128(&self) -> Option<i128>;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
}

/// A cyclic group of prime order `q`, written multiplicatively.
pub trait PrimeGroup: Copy + Debug + Default + Send + Sync + 'static {
    type Scalar: ScalarField;
    type Element: Copy + Eq + Debug + Send + Sync + 'static;
    /// Precomputed table for fast exponentiation of a fixed base.
    type FixedBase: Send + Sync + 'static;

    const ID: GroupId;
    /// Largest security level (bits) this backend can claim.
    const SECURITY_BITS: u32;
    const ELEMENT_LEN: usize;

    fn generator() -> Self::Element;
    fn identity() -> Self::Element;
    fn op(a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn inverse(a: &Self::Element) -> Self::Element;
    fn pow(base: &Self::Element, e: &Self::Scalar) -> Self::Element;

    fn precompute(base: &Self::Element) -> Self::FixedBase;
    fn fixed_pow(table: &Self::FixedBase, e: &Self::Scalar) -> Self::Element;

    /// `prod base_i^e_i`. Backends with a real multi-exponentiation override this.
    fn multi_pow(terms: &[(Self::Element, Self::Scalar)]) -> Self::Element {
        terms
            .iter()
            .fold(Self::identity(), |acc, (b, e)| Self::op(&acc, &Self::pow(b, e)))
    }

    /// Maps 512 uniform bits to a group element (may return the identity
    /// with negligible probability; see [`hash_to_element`]).
    fn from_uniform_bytes(bytes: &[u8; 64]) -> Self::Element;

    fn encode_element(a: &Self::Element) -> Vec<u8>;

    /// Decodes a canonical encoding of an element of the prime-order group.
    fn decode_element(bytes: &[u8]) -> Option<Self::Element>;
}

pub(crate) fn sha512(parts: &[&[u8]]) -> [u8; 64] {
    let mut hasher = Sha512::new();
    for p in parts {
        hasher.update(p);
    }
    hasher.finalize().into()
}

/// Hash-to-group with domain separation. Never returns the identity.
pub fn hash_to_element<G: PrimeGroup>(domain: &[u8], msg: &[u8]) -> G::Element {
    let dlen = (domain.len() as u32).to_le_bytes();
    for counter in 0u32.. {
        let wide = sha512(&[&dlen, domain, msg, &counter.to_le_bytes()]);
        let e = G::from_uniform_bytes(&wide);
        if e != G::identity() {
            return e;
        }
    }
    unreachable!("hash-to-group exhausted its counter")
}

/// Hash-to-scalar with domain separation.
pub fn hash_to_scalar<G: PrimeGroup>(domain: &[u8], msg: &[u8]) -> G::Scalar {
    let dlen = (domain.len() as u32).to_le_bytes();
    G::Scalar::from_wide_bytes(&sha512(&[&dlen, domain, msg]))
}

/// Invokes `$body` with the type alias `$g` bound to the backend named by `$id`.
#[macro_export]
macro_rules! with_group {
    ($id:expr, $g:ident => $body:expr) => {
        match $id {
            $crate::group::GroupId::Ristretto255 => {
                type $g = $crate::group::Ristretto255;
                $body
            }
            $crate::group::GroupId::ToyQ101 => {
                type $g = $crate::group::ToyQ101;
                $body
            }
            $crate::group::GroupId::Toy16 => {
                type $g = $crate::group::ToyGroup16;
                $body
            }
            $crate::group::GroupId::Toy32 => {
                type $g = $crate::group::ToyGroup32;
                $body
            }
            $crate::group::GroupId::Toy61 => {
                type $g = $crate::group::ToyGroup61;
                $body
            }
        }
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_id_round_trips() {
        for id in GroupId::ALL {
            assert_eq!(id.as_str().parse::<GroupId>().unwrap(), id);
            assert_eq!(GroupId::from_code(id.code()), Some(id));
        }
        assert!("p256".parse::<GroupId>().is_err());
    }

    #[test]
    fn from_i64_negates() {
        type S = <ToyGroup61 as PrimeGroup>::Scalar;
        assert_eq!(S::from_i64(-5) + S::from_u64(5), S::zero());
        assert_eq!(S::from_i64(-5).to_centered_i128(), Some(-5));
    }
}
