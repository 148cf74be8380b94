//! Prime-order subgroups of `Z_p^*` for `p < 2^62`.
//!
//! Elements are held in Montgomery form (`R = 2^64`); encodings always use the
//! ordinary residue. Scalars are plain residues modulo `q`.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;

use super::{GroupId, PrimeGroup, ScalarField};

/// Compile-time description of a Schnorr group: `q | p - 1`, `g` of order `q`.
pub trait ModPParams: Copy + Default + fmt::Debug + Send + Sync + 'static {
    const P: u64;
    const Q: u64;
    /// Generator of the order-`q` subgroup, as an ordinary residue.
    const G: u64;
    const ID: GroupId;

    const COFACTOR: u64 = (Self::P - 1) / Self::Q;
    const NINV: u64 = neg_inv_mod_2_64(Self::P);
    const R2: u64 = r_squared(Self::P);
    const ONE_MONT: u64 = ((1u128 << 64) % Self::P as u128) as u64;
}

const fn neg_inv_mod_2_64(p: u64) -> u64 {
    let mut inv: u64 = 1;
    let mut i = 0;
    while i < 6 {
        inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        i += 1;
    }
    inv.wrapping_neg()
}

const fn r_squared(p: u64) -> u64 {
    let r = ((1u128 << 64) % p as u128) as u64;
    ((r as u128 * r as u128) % p as u128) as u64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Q101;
impl ModPParams for Q101 {
    const P: u64 = 607;
    const Q: u64 = 101;
    const G: u64 = 64;
    const ID: GroupId = GroupId::ToyQ101;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Toy16;
impl ModPParams for Toy16 {
    const P: u64 = 130_787;
    const Q: u64 = 65_393;
    const G: u64 = 4;
    const ID: GroupId = GroupId::Toy16;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Toy32;
impl ModPParams for Toy32 {
    const P: u64 = 4_294_967_087;
    const Q: u64 = 2_147_483_543;
    const G: u64 = 4;
    const ID: GroupId = GroupId::Toy32;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Toy61;
impl ModPParams for Toy61 {
    const P: u64 = 2_305_843_009_213_691_579;
    const Q: u64 = 1_152_921_504_606_845_789;
    const G: u64 = 4;
    const ID: GroupId = GroupId::Toy61;
}

#[inline]
fn redc<T: ModPParams>(t: u128) -> u64 {
    let m = (t as u64).wrapping_mul(T::NINV);
    let u = ((t + m as u128 * T::P as u128) >> 64) as u64;
    if u >= T::P {
        u - T::P
    } else {
        u
    }
}

#[inline]
fn mont_mul<T: ModPParams>(a: u64, b: u64) -> u64 {
    redc::<T>(a as u128 * b as u128)
}

fn to_mont<T: ModPParams>(a: u64) -> u64 {
    mont_mul::<T>(a % T::P, T::R2)
}

fn from_mont<T: ModPParams>(a: u64) -> u64 {
    redc::<T>(a as u128)
}

fn mont_pow_u64<T: ModPParams>(base: u64, mut e: u64) -> u64 {
    let mut acc = T::ONE_MONT;
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = mont_mul::<T>(acc, b);
        }
        b = mont_mul::<T>(b, b);
        e >>= 1;
    }
    acc
}

/// Reduces a big-endian 512-bit string modulo `m`.
fn reduce_wide(bytes: &[u8; 64], m: u64) -> u64 {
    bytes.chunks_exact(8).fold(0u64, |acc, chunk| {
        let word = u64::from_be_bytes(chunk.try_into().unwrap());
        (((acc as u128) << 64 | word as u128) % m as u128) as u64
    })
}

/// Residue modulo `T::Q`.
pub struct ModQScalar<T>(u64, PhantomData<T>);

impl<T: ModPParams> ModQScalar<T> {
    pub fn new(v: u64) -> Self {
        ModQScalar(v % T::Q, PhantomData)
    }

    pub fn value(&self) -> u64 {
        self.0
    }
}

impl<T> Clone for ModQScalar<T> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<T> Copy for ModQScalar<T> {}
impl<T> PartialEq for ModQScalar<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl<T> Eq for ModQScalar<T> {}
impl<T> Hash for ModQScalar<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}
impl<T> fmt::Debug for ModQScalar<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModQScalar({})", self.0)
    }
}

impl<T: ModPParams> Add for ModQScalar<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let s = self.0 + rhs.0;
        ModQScalar(if s >= T::Q { s - T::Q } else { s }, PhantomData)
    }
}

impl<T: ModPParams> Sub for ModQScalar<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: ModPParams> Neg for ModQScalar<T> {
    type Output = Self;
    fn neg(self) -> Self {
        ModQScalar(if self.0 == 0 { 0 } else { T::Q - self.0 }, PhantomData)
    }
}

impl<T: ModPParams> Mul for ModQScalar<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        ModQScalar(
            ((self.0 as u128 * rhs.0 as u128) % T::Q as u128) as u64,
            PhantomData,
        )
    }
}

impl<T: ModPParams> ScalarField for ModQScalar<T> {
    const ENCODED_LEN: usize = 8;

    fn zero() -> Self {
        ModQScalar(0, PhantomData)
    }

    fn one() -> Self {
        ModQScalar(1, PhantomData)
    }

    fn from_u64(v: u64) -> Self {
        Self::new(v)
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        ModQScalar(rng.random_range(0..T::Q), PhantomData)
    }

    fn from_wide_bytes(bytes: &[u8; 64]) -> Self {
        ModQScalar(reduce_wide(bytes, T::Q), PhantomData)
    }

    fn invert(&self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        // Fermat: a^(q-2).
        let mut acc = Self::one();
        let mut b = *self;
        let mut e = T::Q - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b;
            }
            b = b * b;
            e >>= 1;
        }
        Some(acc)
    }

    fn encode(&self) -> Vec<u8> {
        self.0.to_le_bytes().to_vec()
    }

    fn decode(bytes: &[u8]) -> Option<Self> {
        let arr: [u8; 8] = bytes.try_into().ok()?;
        let v = u64::from_le_bytes(arr);
        (v < T::Q).then_some(ModQScalar(v, PhantomData))
    }

    fn at_most_half_order(&self) -> bool {
        self.0 <= T::Q.div_ceil(2)
    }

    fn to_centered_i128(&self) -> Option<i128> {
        if self.0 <= T::Q / 2 {
            Some(self.0 as i128)
        } else {
            Some(self.0 as i128 - T::Q as i128)
        }
    }
}

/// Element of the order-`q` subgroup of `Z_p^*`, stored in Montgomery form.
pub struct ModPElement<T>(u64, PhantomData<T>);

impl<T: ModPParams> ModPElement<T> {
    /// The element as an ordinary residue in `[1, p)`.
    pub fn residue(&self) -> u64 {
        from_mont::<T>(self.0)
    }
}

impl<T> Clone for ModPElement<T> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<T> Copy for ModPElement<T> {}
impl<T> PartialEq for ModPElement<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl<T> Eq for ModPElement<T> {}
impl<T> Hash for ModPElement<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}
impl<T: ModPParams> fmt::Debug for ModPElement<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModPElement({})", self.residue())
    }
}

/// Byte-wise window table: `rows[i][j] = base^(j * 256^i)`.
pub struct ModPTable<T> {
    rows: Vec<[u64; 256]>,
    _marker: PhantomData<T>,
}

/// Schnorr group `<g> ⊂ Z_p^*` described by `T`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ModP<T>(PhantomData<T>);

impl<T: ModPParams> PrimeGroup for ModP<T> {
    type Scalar = ModQScalar<T>;
    type Element = ModPElement<T>;
    type FixedBase = ModPTable<T>;

    const ID: GroupId = T::ID;
    // Pollard rho on a q-order group.
    const SECURITY_BITS: u32 = (64 - T::Q.leading_zeros()) / 2;
    const ELEMENT_LEN: usize = 8;

    fn generator() -> Self::Element {
        ModPElement(to_mont::<T>(T::G), PhantomData)
    }

    fn identity() -> Self::Element {
        ModPElement(T::ONE_MONT, PhantomData)
    }

    fn op(a: &Self::Element, b: &Self::Element) -> Self::Element {
        ModPElement(mont_mul::<T>(a.0, b.0), PhantomData)
    }

    fn inverse(a: &Self::Element) -> Self::Element {
        // a^(q-1) = a^-1 inside the order-q subgroup.
        ModPElement(mont_pow_u64::<T>(a.0, T::Q - 1), PhantomData)
    }

    fn pow(base: &Self::Element, e: &Self::Scalar) -> Self::Element {
        ModPElement(mont_pow_u64::<T>(base.0, e.0), PhantomData)
    }

    fn precompute(base: &Self::Element) -> Self::FixedBase {
        let windows = (64 - T::Q.leading_zeros()).div_ceil(8) as usize;
        let mut rows = Vec::with_capacity(windows);
        let mut b = base.0;
        for _ in 0..windows {
            let mut row = [T::ONE_MONT; 256];
            for j in 1..256 {
                row[j] = mont_mul::<T>(row[j - 1], b);
            }
            b = mont_mul::<T>(row[255], b);
            rows.push(row);
        }
        ModPTable {
            rows,
            _marker: PhantomData,
        }
    }

    fn fixed_pow(table: &Self::FixedBase, e: &Self::Scalar) -> Self::Element {
        let bytes = e.0.to_le_bytes();
        let acc = table
            .rows
            .iter()
            .zip(bytes)
            .fold(T::ONE_MONT, |acc, (row, byte)| {
                if byte == 0 {
                    acc
                } else {
                    mont_mul::<T>(acc, row[byte as usize])
                }
            });
        ModPElement(acc, PhantomData)
    }

    fn from_uniform_bytes(bytes: &[u8; 64]) -> Self::Element {
        let x = reduce_wide(bytes, T::P).max(1);
        ModPElement(mont_pow_u64::<T>(to_mont::<T>(x), T::COFACTOR), PhantomData)
    }

    fn encode_element(a: &Self::Element) -> Vec<u8> {
        a.residue().to_le_bytes().to_vec()
    }

    fn decode_element(bytes: &[u8]) -> Option<Self::Element> {
        let arr: [u8; 8] = bytes.try_into().ok()?;
        let v = u64::from_le_bytes(arr);
        if v == 0 || v >= T::P {
            return None;
        }
        let m = to_mont::<T>(v);
        (mont_pow_u64::<T>(m, T::Q) == T::ONE_MONT).then_some(ModPElement(m, PhantomData))
    }
}
