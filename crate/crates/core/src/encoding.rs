//! Canonical byte encodings.
//!
//! Variable-length fields are prefixed with a little-endian `u32` length.
//! Scalars and elements use their backend's fixed-length canonical form.

use crate::group::{PrimeGroup, ScalarField};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input")]
    Truncated,
    #[error("invalid group element encoding")]
    BadElement,
    #[error("invalid scalar encoding")]
    BadScalar,
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("invalid field: {0}")]
    Invalid(&'static str),
}

#[derive(Default, Debug, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    /// Length-prefixed byte string.
    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.u32(v.len() as u32);
        self.buf.extend_from_slice(v);
        self
    }

    pub fn raw(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn element<G: PrimeGroup>(&mut self, e: &G::Element) -> &mut Self {
        self.raw(&G::encode_element(e))
    }

    pub fn scalar<G: PrimeGroup>(&mut self, s: &G::Scalar) -> &mut Self {
        self.raw(&s.encode())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }
}

#[derive(Debug)]
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() < n {
            return Err(DecodeError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn element<G: PrimeGroup>(&mut self) -> Result<G::Element, DecodeError> {
        G::decode_element(self.take(G::ELEMENT_LEN)?).ok_or(DecodeError::BadElement)
    }

    pub fn scalar<G: PrimeGroup>(&mut self) -> Result<G::Scalar, DecodeError> {
        G::Scalar::decode(self.take(G::Scalar::ENCODED_LEN)?).ok_or(DecodeError::BadScalar)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len()
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.buf.len() {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }
}

pub fn decode_element<G: PrimeGroup>(bytes: &[u8]) -> Result<G::Element, DecodeError> {
    G::decode_element(bytes).ok_or(DecodeError::BadElement)
}

pub fn decode_scalar<G: PrimeGroup>(bytes: &[u8]) -> Result<G::Scalar, DecodeError> {
    G::Scalar::decode(bytes).ok_or(DecodeError::BadScalar)
}
