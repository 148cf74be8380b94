use std::fmt;
use std::sync::Arc;

use super::{hash_to_element, GroupError, GroupId, PrimeGroup};
use crate::encoding::{Reader, Writer};

/// Version byte leading every serialized [`PublicParams`].
pub const PARAMS_VERSION: u8 = 1;

/// Domain tag used to derive the second Pedersen generator.
pub const DEFAULT_H_DOMAIN: &[u8] = b"VDP-pedersen-h-v1";

/// Group description plus the two Pedersen generators `g` and `h`.
///
/// `h` is the hash-to-group image of `encode(g)` under a public domain tag,
/// so nobody knows `log_g(h)`. Fixed-base tables for both generators are
/// built once at setup and shared between clones.
pub struct PublicParams<G: PrimeGroup> {
    g: G::Element,
    h: G::Element,
    domain: Vec<u8>,
    security_bits: u32,
    g_table: Arc<G::FixedBase>,
    h_table: Arc<G::FixedBase>,
}

impl<G: PrimeGroup> Clone for PublicParams<G> {
    fn clone(&self) -> Self {
        PublicParams {
            g: self.g,
            h: self.h,
            domain: self.domain.clone(),
            security_bits: self.security_bits,
            g_table: Arc::clone(&self.g_table),
            h_table: Arc::clone(&self.h_table),
        }
    }
}

impl<G: PrimeGroup> fmt::Debug for PublicParams<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PublicParams")
            .field("group", &G::ID)
            .field("g", &self.g)
            .field("h", &self.h)
            .field("domain", &String::from_utf8_lossy(&self.domain))
            .finish()
    }
}

impl<G: PrimeGroup> PartialEq for PublicParams<G> {
    fn eq(&self, other: &Self) -> bool {
        self.g == other.g
            && self.h == other.h
            && self.domain == other.domain
            && self.security_bits == other.security_bits
    }
}

impl<G: PrimeGroup> Eq for PublicParams<G> {}

/// `pp <- Setup(1^k)` with the default domain tag.
pub fn setup<G: PrimeGroup>(security_bits: u32) -> Result<PublicParams<G>, GroupError> {
    setup_with_domain(security_bits, DEFAULT_H_DOMAIN)
}

pub fn setup_with_domain<G: PrimeGroup>(
    security_bits: u32,
    domain: &[u8],
) -> Result<PublicParams<G>, GroupError> {
    if security_bits == 0 || security_bits > G::SECURITY_BITS {
        return Err(GroupError::UnsupportedSecurityLevel {
            group: G::ID,
            requested: security_bits,
            supported: G::SECURITY_BITS,
        });
    }
    let g = G::generator();
    let mut msg = Writer::new();
    msg.u8(G::ID.code()).bytes(&G::encode_element(&g));
    let h = hash_to_element::<G>(domain, msg.as_slice());
    Ok(PublicParams {
        g,
        h,
        domain: domain.to_vec(),
        security_bits,
        g_table: Arc::new(G::precompute(&g)),
        h_table: Arc::new(G::precompute(&h)),
    })
}

impl<G: PrimeGroup> PublicParams<G> {
    /// Parameters at the backend's full security level.
    pub fn standard() -> Self {
        setup::<G>(G::SECURITY_BITS).expect("backend security level is always supported")
    }

    pub fn group_id(&self) -> GroupId {
        G::ID
    }

    pub fn g(&self) -> &G::Element {
        &self.g
    }

    pub fn h(&self) -> &G::Element {
        &self.h
    }

    pub fn domain(&self) -> &[u8] {
        &self.domain
    }

    pub fn security_bits(&self) -> u32 {
        self.security_bits
    }

    /// `g^e` using the precomputed table.
    pub fn g_pow(&self, e: &G::Scalar) -> G::Element {
        G::fixed_pow(&self.g_table, e)
    }

    /// `h^e` using the precomputed table.
    pub fn h_pow(&self, e: &G::Scalar) -> G::Element {
        G::fixed_pow(&self.h_table, e)
    }

    /// `version ‖ group code ‖ security bits ‖ domain ‖ g ‖ h`.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(PARAMS_VERSION)
            .u8(G::ID.code())
            .u32(self.security_bits)
            .bytes(&self.domain)
            .bytes(&G::encode_element(&self.g))
            .bytes(&G::encode_element(&self.h));
        w.finish()
    }

    /// Decodes and re-derives the parameters; any `h` that does not match the
    /// hash-to-group derivation is rejected.
    pub fn decode(bytes: &[u8]) -> Result<Self, GroupError> {
        let mut r = Reader::new(bytes);
        let malformed = |_| GroupError::MalformedParams("truncated");
        if r.u8().map_err(malformed)? != PARAMS_VERSION {
            return Err(GroupError::MalformedParams("unsupported version"));
        }
        if r.u8().map_err(malformed)? != G::ID.code() {
            return Err(GroupError::MalformedParams("group mismatch"));
        }
        let security = r.u32().map_err(malformed)?;
        let domain = r.bytes().map_err(malformed)?.to_vec();
        let g = r.bytes().map_err(malformed)?.to_vec();
        let h = r.bytes().map_err(malformed)?.to_vec();
        r.finish()
            .map_err(|_| GroupError::MalformedParams("trailing bytes"))?;
        let pp = setup_with_domain::<G>(security, &domain)?;
        if G::encode_element(&pp.g) != g || G::encode_element(&pp.h) != h {
            return Err(GroupError::MalformedParams("generators do not match derivation"));
        }
        Ok(pp)
    }
}
