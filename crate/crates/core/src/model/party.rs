use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

/// A protocol participant: the data concentrator or one smart meter.
///
/// Smart meters are numbered `1..=N`. Ordering puts the DC first and then
/// meters by index, which keeps edge normalization and maps deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PartyId {
    Dc,
    Sm(u32),
}

impl PartyId {
    pub fn is_dc(self) -> bool {
        matches!(self, PartyId::Dc)
    }

    /// Meter index, `None` for the DC.
    pub fn sm_index(self) -> Option<u32> {
        match self {
            PartyId::Dc => None,
            PartyId::Sm(i) => Some(i),
        }
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Dc => f.write_str("DC"),
            PartyId::Sm(i) => write!(f, "SM{i}"),
        }
    }
}

impl FromStr for PartyId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "DC" {
            return Ok(PartyId::Dc);
        }
        let bad = || ModelError::BadPartyName(s.to_owned());
        let digits = s.strip_prefix("SM").ok_or_else(bad)?;
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        digits.parse().map(PartyId::Sm).map_err(|_| bad())
    }
}

impl Serialize for PartyId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PartyId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;

        impl de::Visitor<'_> for Visitor {
            type Value = PartyId;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a party name such as \"DC\" or \"SM3\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<PartyId, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_str(Visitor)
    }
}
