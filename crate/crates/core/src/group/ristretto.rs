use std::sync::OnceLock;

use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoBasepointTable, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::{Identity, VartimeMultiscalarMul};
use rand::Rng;

use super::{GroupId, PrimeGroup, ScalarField};

/// The Ristretto prime-order group over Curve25519.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ristretto255;

/// `ceil(l/2) = (l+1)/2 = 2^-1 mod l`, little-endian.
fn half_order_ceil() -> &'static [u8; 32] {
    static HALF: OnceLock<[u8; 32]> = OnceLock::new();
    HALF.get_or_init(|| Scalar::from(2u64).invert().to_bytes())
}

fn le_cmp(a: &[u8; 32], b: &[u8; 32]) -> std::cmp::Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

fn fits_i128(bytes: &[u8; 32]) -> Option<i128> {
    if bytes[16..].iter().any(|&b| b != 0) || bytes[15] & 0x80 != 0 {
        return None;
    }
    Some(i128::from_le_bytes(bytes[..16].try_into().unwrap()))
}

impl ScalarField for Scalar {
    const ENCODED_LEN: usize = 32;

    fn zero() -> Self {
        Scalar::ZERO
    }

    fn one() -> Self {
        Scalar::ONE
    }

    fn from_u64(v: u64) -> Self {
        Scalar::from(v)
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar::from_bytes_mod_order_wide(&wide)
    }

    fn from_wide_bytes(bytes: &[u8; 64]) -> Self {
        Scalar::from_bytes_mod_order_wide(bytes)
    }

    fn invert(&self) -> Option<Self> {
        (*self != Scalar::ZERO).then(|| Scalar::invert(self))
    }

    fn encode(&self) -> Vec<u8> {
        self.to_bytes().to_vec()
    }

    fn decode(bytes: &[u8]) -> Option<Self> {
        let arr: [u8; 32] = bytes.try_into().ok()?;
        Option::from(Scalar::from_canonical_bytes(arr))
    }

    fn at_most_half_order(&self) -> bool {
        le_cmp(self.as_bytes(), half_order_ceil()) != std::cmp::Ordering::Greater
    }

    fn to_centered_i128(&self) -> Option<i128> {
        if let Some(v) = fits_i128(self.as_bytes()) {
            return Some(v);
        }
        fits_i128(&(-self).to_bytes()).map(|v| -v)
    }
}

impl PrimeGroup for Ristretto255 {
    type Scalar = Scalar;
    type Element = RistrettoPoint;
    type FixedBase = RistrettoBasepointTable;

    const ID: GroupId = GroupId::Ristretto255;
    const SECURITY_BITS: u32 = 128;
    const ELEMENT_LEN: usize = 32;

    fn generator() -> RistrettoPoint {
        curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT
    }

    fn identity() -> RistrettoPoint {
        RistrettoPoint::identity()
    }

    fn op(a: &RistrettoPoint, b: &RistrettoPoint) -> RistrettoPoint {
        a + b
    }

    fn inverse(a: &RistrettoPoint) -> RistrettoPoint {
        -a
    }

    fn pow(base: &RistrettoPoint, e: &Scalar) -> RistrettoPoint {
        base * e
    }

    fn precompute(base: &RistrettoPoint) -> RistrettoBasepointTable {
        RistrettoBasepointTable::create(base)
    }

    fn fixed_pow(table: &RistrettoBasepointTable, e: &Scalar) -> RistrettoPoint {
        table * e
    }

    fn multi_pow(terms: &[(RistrettoPoint, Scalar)]) -> RistrettoPoint {
        RistrettoPoint::vartime_multiscalar_mul(
            terms.iter().map(|(_, e)| e),
            terms.iter().map(|(b, _)| b),
        )
    }

    fn from_uniform_bytes(bytes: &[u8; 64]) -> RistrettoPoint {
        RistrettoPoint::from_uniform_bytes(bytes)
    }

    fn encode_element(a: &RistrettoPoint) -> Vec<u8> {
        a.compress().to_bytes().to_vec()
    }

    fn decode_element(bytes: &[u8]) -> Option<RistrettoPoint> {
        CompressedRistretto::from_slice(bytes).ok()?.decompress()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn half_order_threshold() {
        let half = Scalar::from(2u64).invert();
        assert!(half.at_most_half_order());
        assert!(!(half + Scalar::ONE).at_most_half_order());
        assert!(Scalar::ZERO.at_most_half_order());
        assert!(!(-Scalar::ONE).at_most_half_order());
    }

    #[test]
    fn centered_lift() {
        assert_eq!(Scalar::from(42u64).to_centered_i128(), Some(42));
        assert_eq!((-Scalar::from(42u64)).to_centered_i128(), Some(-42));
        assert_eq!(Scalar::from(2u64).invert().to_centered_i128(), None);
    }

    #[test]
    fn decode_rejects_non_canonical() {
        // l itself is not a canonical scalar encoding.
        let mut l = (-Scalar::ONE).to_bytes();
        l[0] += 1;
        assert!(<Scalar as ScalarField>::decode(&l).is_none());
        assert!(Ristretto255::decode_element(&[0xff; 32]).is_none());
        assert!(Ristretto255::decode_element(&[0u8; 31]).is_none());
    }

    #[test]
    fn fixed_base_and_multi_pow_agree_with_pow() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let g = Ristretto255::generator();
        let h = Ristretto255::pow(&g, &<Scalar as ScalarField>::random(&mut rng));
        let table = Ristretto255::precompute(&h);
        let a = <Scalar as ScalarField>::random(&mut rng);
        let b = <Scalar as ScalarField>::random(&mut rng);
        assert_eq!(Ristretto255::fixed_pow(&table, &a), Ristretto255::pow(&h, &a));
        assert_eq!(
            Ristretto255::multi_pow(&[(g, a), (h, b)]),
            Ristretto255::op(&Ristretto255::pow(&g, &a), &Ristretto255::pow(&h, &b))
        );
    }
}
