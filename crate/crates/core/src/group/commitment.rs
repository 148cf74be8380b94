use std::fmt;

use super::{PrimeGroup, PublicParams, ScalarField};

/// Pedersen commitment `g^x h^r`.
///
/// Commitments form a group: [`Commitment::combine`] multiplies points and
/// commits to the sum of the openings.
pub struct Commitment<G: PrimeGroup>(pub G::Element);

impl<G: PrimeGroup> Clone for Commitment<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for Commitment<G> {}
impl<G: PrimeGroup> PartialEq for Commitment<G> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl<G: PrimeGroup> Eq for Commitment<G> {}
impl<G: PrimeGroup> fmt::Debug for Commitment<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Commitment({:?})", self.0)
    }
}

impl<G: PrimeGroup> Commitment<G> {
    pub fn identity() -> Self {
        Commitment(G::identity())
    }

    pub fn point(&self) -> &G::Element {
        &self.0
    }

    pub fn combine(&self, other: &Self) -> Self {
        Commitment(G::op(&self.0, &other.0))
    }

    pub fn invert(&self) -> Self {
        Commitment(G::inverse(&self.0))
    }

    /// Product of all commitments (identity for an empty iterator).
    pub fn product<'a, I>(iter: I) -> Self
    where
        I: IntoIterator<Item = &'a Commitment<G>>,
    {
        iter.into_iter()
            .fold(Self::identity(), |acc, c| acc.combine(c))
    }

    pub fn encode(&self) -> Vec<u8> {
        G::encode_element(&self.0)
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        G::decode_element(bytes).map(Commitment)
    }
}

impl<G: PrimeGroup> PublicParams<G> {
    /// `Com(x, r) = g^x h^r`.
    pub fn commit(&self, x: &G::Scalar, r: &G::Scalar) -> Commitment<G> {
        Commitment(G::op(&self.g_pow(x), &self.h_pow(r)))
    }

    pub fn verify_opening(&self, c: &Commitment<G>, x: &G::Scalar, r: &G::Scalar) -> bool {
        self.commit(x, r) == *c
    }

    /// `Com(1, 0) · c^-1`: if `c` opens to `(v, s)` the result opens to `(1 - v, -s)`.
    pub fn one_minus(&self, c: &Commitment<G>) -> Commitment<G> {
        Commitment(G::op(self.g(), &G::inverse(&c.0)))
    }

    /// Convenience for integer openings.
    pub fn commit_u64(&self, x: u64, r: &G::Scalar) -> Commitment<G> {
        self.commit(&G::Scalar::from_u64(x), r)
    }
}
