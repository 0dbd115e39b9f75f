//! Additive masking in `Z_k` with round-dependent PRF pads.
//!
//! A meter publishes `m + s + PRF_{k_i}(t) mod k` to the DC and folds its
//! share `s` into the running sum `S` carried along the ring. The DC, which
//! knows `s_0` and every PRF key, removes both and is left with `Σ m`.

use std::collections::BTreeMap;
use std::fmt;

use hmac::{Hmac, Mac};
use rand::{Rng, RngCore};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use sha2::Sha256;
use thiserror::Error;

use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskingError {
    #[error("modulus must be a power of two between 2 and 2^64")]
    InvalidModulus,
    #[error("measurement {m} is not below the modulus {k}")]
    MeasurementOutOfRange { m: u64, k: u128 },
    #[error("value {0} is not a residue modulo k")]
    NotAResidue(u64),
    #[error("masked values and PRF values must cover the same non-empty meter set")]
    KeySetMismatch,
}

/// The masking modulus `k = 2^bits`, `1 <= bits <= 64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Modulus {
    bits: u32,
}

impl Modulus {
    pub fn from_bits(bits: u32) -> Result<Self, MaskingError> {
        if (1..=64).contains(&bits) {
            Ok(Modulus { bits })
        } else {
            Err(MaskingError::InvalidModulus)
        }
    }

    pub fn new(k: u128) -> Result<Self, MaskingError> {
        if k.is_power_of_two() && k >= 2 {
            Self::from_bits(k.trailing_zeros())
        } else {
            Err(MaskingError::InvalidModulus)
        }
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn value(self) -> u128 {
        1u128 << self.bits
    }

    fn mask(self) -> u64 {
        u64::MAX >> (64 - self.bits)
    }

    pub fn reduce(self, x: u128) -> u64 {
        (x as u64) & self.mask()
    }

    pub fn contains(self, x: u64) -> bool {
        u128::from(x) < self.value()
    }

    pub fn add(self, a: u64, b: u64) -> u64 {
        a.wrapping_add(b) & self.mask()
    }

    pub fn sub(self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b) & self.mask()
    }

    /// A uniform residue. Exact because `k` divides `2^64`.
    pub fn sample<R: RngCore>(self, rng: &mut R) -> u64 {
        rng.random::<u64>() & self.mask()
    }
}

/// A 128-bit PRF key shared between one meter and the DC.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrfKey([u8; 16]);

impl PrfKey {
    pub fn new(bytes: [u8; 16]) -> Self {
        PrfKey(bytes)
    }

    pub fn random<R: RngCore>(rng: &mut R) -> Self {
        let mut b = [0u8; 16];
        rng.fill_bytes(&mut b);
        PrfKey(b)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for PrfKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrfKey({})", self.to_hex())
    }
}

impl Serialize for PrfKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for PrfKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let mut b = [0u8; 16];
        hex::decode_to_slice(&text, &mut b)
            .map_err(|e| de::Error::custom(format!("PRF key must be 32 hex digits: {e}")))?;
        Ok(PrfKey(b))
    }
}

/// `PRF_key(t)`: HMAC-SHA256 over the big-endian round index, first 128
/// bits taken big-endian and truncated to `log2 k` bits.
pub fn prf(key: &PrfKey, t: u64, k: Modulus) -> u64 {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&key.0).expect("HMAC accepts any key length");
    mac.update(&t.to_be_bytes());
    let tag = mac.finalize().into_bytes();
    let head = u128::from_be_bytes(tag[..16].try_into().expect("16 bytes"));
    k.reduce(head)
}

/// A residue in `Z_k` used as a random share or running share sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskShare(u64);

impl MaskShare {
    pub fn new(value: u64, k: Modulus) -> Result<Self, MaskingError> {
        if k.contains(value) {
            Ok(MaskShare(value))
        } else {
            Err(MaskingError::NotAResidue(value))
        }
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

/// `m̃ = m + s + p mod k`.
pub fn mask(m: u64, s: MaskShare, p: u64, k: Modulus) -> Result<u64, MaskingError> {
    if !k.contains(m) {
        return Err(MaskingError::MeasurementOutOfRange { m, k: k.value() });
    }
    if !k.contains(p) {
        return Err(MaskingError::NotAResidue(p));
    }
    Ok(k.add(k.add(m, s.0), p))
}

/// `S_i = S + s_i mod k`.
pub fn update_share(sum: MaskShare, s: MaskShare, k: Modulus) -> MaskShare {
    MaskShare(k.add(sum.0, s.0))
}

/// DC-side masking parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskingParams {
    pub k: Modulus,
    pub keys: BTreeMap<u32, PrfKey>,
    /// Source of `s_0`.
    pub dc_seed: u64,
}

impl MaskingParams {
    /// Keys for meters `1..=n_sm`, taking pinned ones as given and deriving
    /// the rest from `seed`.
    pub fn derive(n_sm: u32, k: Modulus, seed: u64, pinned: &BTreeMap<u32, PrfKey>) -> Self {
        let keys = (1..=n_sm)
            .map(|i| {
                let key = pinned
                    .get(&i)
                    .copied()
                    .unwrap_or_else(|| PrfKey::random(&mut seed::rng(seed, "prf-key", &[u64::from(i)])));
                (i, key)
            })
            .collect();
        MaskingParams {
            k,
            keys,
            dc_seed: seed::child(seed, "dc", &[]),
        }
    }
}

/// Draws `s_0` and starts the running sum at `S = s_0`.
pub fn init_share(params: &MaskingParams) -> (u64, MaskShare) {
    let s0 = params.k.sample(&mut seed::rng(params.dc_seed, "s0", &[]));
    (s0, MaskShare(s0))
}

/// `A_t = -S + s_0 + Σ m̃_i - Σ PRF_{k_i}(t) mod k` over the meters in
/// `masked`, which must be exactly the meters in `prfs`.
pub fn unmask_aggregate(
    final_share: MaskShare,
    s0: u64,
    masked: &BTreeMap<u32, u64>,
    prfs: &BTreeMap<u32, u64>,
    k: Modulus,
) -> Result<u64, MaskingError> {
    if masked.is_empty() || !masked.keys().eq(prfs.keys()) {
        return Err(MaskingError::KeySetMismatch);
    }
    let mut acc = k.sub(s0, final_share.0);
    for (m, p) in masked.values().zip(prfs.values()) {
        acc = k.sub(k.add(acc, *m), *p);
    }
    Ok(acc)
}
