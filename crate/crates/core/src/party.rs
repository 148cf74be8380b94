use std::fmt;
use std::str::FromStr;

use crate::encoding::{DecodeError, Reader, Writer};

/// Identity of a protocol participant. Provers are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartyId {
    Client(u64),
    Prover(u32),
    Verifier,
}

impl PartyId {
    /// Byte label used for Fiat–Shamir domain separation.
    pub fn label(&self) -> Vec<u8> {
        self.to_string().into_bytes()
    }

    /// Tag byte followed by a `u64` index.
    pub fn write(&self, w: &mut Writer) {
        match *self {
            PartyId::Client(i) => w.u8(0).u64(i),
            PartyId::Prover(k) => w.u8(1).u64(k as u64),
            PartyId::Verifier => w.u8(2).u64(0),
        };
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let tag = r.u8()?;
        let idx = r.u64()?;
        match (tag, idx) {
            (0, i) => Ok(PartyId::Client(i)),
            (1, k) if k >= 1 && k <= u32::MAX as u64 => Ok(PartyId::Prover(k as u32)),
            (2, 0) => Ok(PartyId::Verifier),
            _ => Err(DecodeError::Invalid("party")),
        }
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Client(i) => write!(f, "client-{i}"),
            PartyId::Prover(k) => write!(f, "prover-{k}"),
            PartyId::Verifier => f.write_str("verifier"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid party identifier `{0}`")]
pub struct ParsePartyError(pub String);

impl FromStr for PartyId {
    type Err = ParsePartyError;

    /// Accepts `verifier`, `prover-1`/`prover1` and `client-3`/`client3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParsePartyError(s.to_string());
        let s = s.trim();
        if s == "verifier" {
            return Ok(PartyId::Verifier);
        }
        if let Some(rest) = s.strip_prefix("prover") {
            let k: u32 = rest.trim_start_matches('-').parse().map_err(|_| err())?;
            return if k == 0 { Err(err()) } else { Ok(PartyId::Prover(k)) };
        }
        if let Some(rest) = s.strip_prefix("client") {
            let i = rest.trim_start_matches('-').parse().map_err(|_| err())?;
            return Ok(PartyId::Client(i));
        }
        Err(err())
    }
}

impl serde::Serialize for PartyId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PartyId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parse_round_trip() {
        for p in [PartyId::Client(0), PartyId::Client(17), PartyId::Prover(3), PartyId::Verifier] {
            assert_eq!(p.to_string().parse::<PartyId>().unwrap(), p);
        }
        assert_eq!("prover1".parse::<PartyId>().unwrap(), PartyId::Prover(1));
        assert!("prover0".parse::<PartyId>().is_err());
        assert!("server-1".parse::<PartyId>().is_err());
    }
}
