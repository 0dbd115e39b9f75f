//! Paillier encryption with `g = n + 1`.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PaillierError {
    #[error("plaintext is not below the modulus n")]
    PlaintextOutOfRange,
    #[error("encryption randomness must be a unit modulo n")]
    BadRandomness,
    #[error("ciphertext is not a unit modulo n²")]
    MalformedCiphertext,
    #[error("p and q must be distinct odd primes with gcd(pq, (p-1)(q-1)) = 1")]
    InvalidPrimes,
}

fn big_to_hex(x: &BigUint) -> String {
    x.to_str_radix(16)
}

fn big_from_hex<E: de::Error>(s: &str) -> Result<BigUint, E> {
    BigUint::parse_bytes(s.as_bytes(), 16).ok_or_else(|| E::custom(format!("invalid hex integer {s:?}")))
}

/// An element of `Z_{n²}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ciphertext(BigUint);

impl Ciphertext {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl From<BigUint> for Ciphertext {
    fn from(v: BigUint) -> Self {
        Ciphertext(v)
    }
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ciphertext(0x{})", big_to_hex(&self.0))
    }
}

impl Serialize for Ciphertext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&big_to_hex(&self.0))
    }
}

impl<'de> Deserialize<'de> for Ciphertext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        big_from_hex(&text).map(Ciphertext)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PublicKey {
    n: BigUint,
    n_sq: BigUint,
}

impl PublicKey {
    pub fn new(n: BigUint) -> Self {
        let n_sq = &n * &n;
        PublicKey { n, n_sq }
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_sq
    }

    pub fn bits(&self) -> u64 {
        self.n.bits()
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey(n = 0x{})", big_to_hex(&self.n))
    }
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&big_to_hex(&self.n))
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        big_from_hex(&text).map(PublicKey::new)
    }
}

/// A key pair. Serialized as the two primes, from which everything else is
/// recomputed.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PrimePair", into = "PrimePair")]
pub struct PaillierKeys {
    pub public: PublicKey,
    lambda: BigUint,
    mu: BigUint,
    p: BigUint,
    q: BigUint,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimePair {
    p: String,
    q: String,
}

impl TryFrom<PrimePair> for PaillierKeys {
    type Error = String;

    fn try_from(pair: PrimePair) -> Result<Self, String> {
        let p = big_from_hex::<serde_json::Error>(&pair.p).map_err(|e| e.to_string())?;
        let q = big_from_hex::<serde_json::Error>(&pair.q).map_err(|e| e.to_string())?;
        let mut rng = seed::rng(0, "paillier-check", &[]);
        if !is_probable_prime(&p, &mut rng) || !is_probable_prime(&q, &mut rng) {
            return Err(PaillierError::InvalidPrimes.to_string());
        }
        PaillierKeys::from_primes(p, q).map_err(|e| e.to_string())
    }
}

impl From<PaillierKeys> for PrimePair {
    fn from(k: PaillierKeys) -> Self {
        PrimePair {
            p: big_to_hex(&k.p),
            q: big_to_hex(&k.q),
        }
    }
}

impl fmt::Debug for PaillierKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PaillierKeys").field("public", &self.public).finish_non_exhaustive()
    }
}

impl PaillierKeys {
    /// Builds a key pair from known primes. Primality is the caller's
    /// responsibility; the structural conditions are checked.
    pub fn from_primes(p: BigUint, q: BigUint) -> Result<Self, PaillierError> {
        let one = BigUint::one();
        let two = BigUint::from(2u32);
        if p == q || p <= two || q <= two || p.is_even() || q.is_even() {
            return Err(PaillierError::InvalidPrimes);
        }
        let n = &p * &q;
        let (pm, qm) = (&p - &one, &q - &one);
        if !n.gcd(&(&pm * &qm)).is_one() {
            return Err(PaillierError::InvalidPrimes);
        }
        let lambda = pm.lcm(&qm);
        // With g = n + 1, L(g^λ mod n²) = λ mod n.
        let mu = (&lambda % &n).modinv(&n).ok_or(PaillierError::InvalidPrimes)?;
        Ok(PaillierKeys {
            public: PublicKey::new(n),
            lambda,
            mu,
            p,
            q,
        })
    }

    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }
}

const SMALL_PRIMES: [u32; 53] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239,
    241, 251,
];

const MR_ROUNDS: usize = 40;

fn random_bits<R: RngCore>(rng: &mut R, bits: u64) -> BigUint {
    let mut bytes = vec![0u8; bits.div_ceil(8) as usize];
    rng.fill_bytes(&mut bytes);
    let excess = bytes.len() as u64 * 8 - bits;
    bytes[0] &= 0xff >> excess;
    BigUint::from_bytes_be(&bytes)
}

/// Uniform in `[lo, hi)` by rejection.
fn random_range<R: RngCore>(rng: &mut R, lo: &BigUint, hi: &BigUint) -> BigUint {
    let span = hi - lo;
    let bits = span.bits();
    loop {
        let x = random_bits(rng, bits);
        if x < span {
            return x + lo;
        }
    }
}

/// Trial division followed by Miller–Rabin with random bases.
pub fn is_probable_prime<R: RngCore>(n: &BigUint, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    if *n == two {
        return true;
    }
    if n.is_even() {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n - 1 is nonzero");
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..MR_ROUNDS {
        let a = random_range(rng, &two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A prime of exactly `bits` bits with the top two bits set, so that the
/// product of two such primes has exactly `2 * bits` bits.
fn random_prime<R: RngCore>(rng: &mut R, bits: u64) -> BigUint {
    loop {
        let mut c = random_bits(rng, bits);
        c.set_bit(bits - 1, true);
        c.set_bit(bits - 2, true);
        c.set_bit(0, true);
        if is_probable_prime(&c, rng) {
            return c;
        }
    }
}

/// Deterministic key generation for an even modulus size of at least 16 bits.
pub fn keygen(bits: u32, seed: u64) -> PaillierKeys {
    assert!(bits >= 16 && bits % 2 == 0, "key size must be even and at least 16 bits");
    let mut rng = seed::rng(seed, "paillier-keygen", &[u64::from(bits)]);
    let half = u64::from(bits / 2);
    loop {
        let p = random_prime(&mut rng, half);
        let q = random_prime(&mut rng, half);
        if let Ok(keys) = PaillierKeys::from_primes(p, q) {
            return keys;
        }
    }
}

/// `c = g^m · r^n mod n²` with `g = n + 1`, i.e. `(1 + m·n) · r^n`.
pub fn encrypt(pk: &PublicKey, m: &BigUint, r: &BigUint) -> Result<Ciphertext, PaillierError> {
    if m >= &pk.n {
        return Err(PaillierError::PlaintextOutOfRange);
    }
    if r.is_zero() || r >= &pk.n || !r.gcd(&pk.n).is_one() {
        return Err(PaillierError::BadRandomness);
    }
    let gm = (BigUint::one() + m * &pk.n) % &pk.n_sq;
    Ok(Ciphertext(gm * r.modpow(&pk.n, &pk.n_sq) % &pk.n_sq))
}

/// Draws a unit `r` modulo `n` from `rng`.
pub fn random_unit<R: RngCore>(pk: &PublicKey, rng: &mut R) -> BigUint {
    let one = BigUint::one();
    loop {
        let r = random_range(rng, &one, &pk.n);
        if r.gcd(&pk.n).is_one() {
            return r;
        }
    }
}

pub fn encrypt_with_rng<R: RngCore>(pk: &PublicKey, m: &BigUint, rng: &mut R) -> Result<Ciphertext, PaillierError> {
    let r = random_unit(pk, rng);
    encrypt(pk, m, &r)
}

/// `S · c mod n²`; decrypts to the sum of the plaintexts modulo `n`.
pub fn add_encrypted(pk: &PublicKey, s: &Ciphertext, c: &Ciphertext) -> Ciphertext {
    Ciphertext(&s.0 * &c.0 % &pk.n_sq)
}

/// Modular inverse of a ciphertext, used to cancel a known factor.
pub fn invert(pk: &PublicKey, c: &Ciphertext) -> Result<Ciphertext, PaillierError> {
    c.0.modinv(&pk.n_sq).map(Ciphertext).ok_or(PaillierError::MalformedCiphertext)
}

/// `L(S^λ mod n²) · μ mod n` with `L(x) = (x - 1) / n`.
pub fn decrypt_aggregate(sk: &PaillierKeys, s: &Ciphertext) -> Result<BigUint, PaillierError> {
    let pk = &sk.public;
    if s.0.is_zero() || s.0 >= pk.n_sq || !s.0.gcd(&pk.n).is_one() {
        return Err(PaillierError::MalformedCiphertext);
    }
    let x = s.0.modpow(&sk.lambda, &pk.n_sq);
    let l = (x - BigUint::one()) / &pk.n;
    Ok(l * &sk.mu % &pk.n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::sync::OnceLock;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn keys256() -> &'static PaillierKeys {
        static KEYS: OnceLock<PaillierKeys> = OnceLock::new();
        KEYS.get_or_init(|| keygen(256, 7))
    }

    fn tiny() -> PaillierKeys {
        PaillierKeys::from_primes(big(5), big(7)).unwrap()
    }

    /// Inverts encryption over n = 35 by exhausting every (m, r).
    fn brute_force_plaintext(c: &BigUint) -> u64 {
        let (n, n_sq) = (35u64, 1225u64);
        let c = u64::try_from(c).unwrap();
        for m in 0..n {
            for r in 1..n {
                if num_integer::gcd(r, n) != 1 {
                    continue;
                }
                let mut rn = 1u64;
                for _ in 0..n {
                    rn = rn * r % n_sq;
                }
                let mut gm = 1u64;
                for _ in 0..m {
                    gm = gm * (n + 1) % n_sq;
                }
                if gm * rn % n_sq == c {
                    return m;
                }
            }
        }
        panic!("no preimage for {c}");
    }

    #[test]
    fn tiny_key_parameters() {
        let k = tiny();
        assert_eq!(k.public.n(), &big(35));
        assert_eq!(k.lambda(), &big(12));
        assert_eq!(k.mu(), &big(3));
    }

    #[test]
    fn tiny_prime_oracle() {
        let k = tiny();
        for m in 0..35u64 {
            for r in [1u64, 2, 3, 4, 11, 34] {
                let c = encrypt(&k.public, &big(m), &big(r)).unwrap();
                assert_eq!(brute_force_plaintext(c.value()), m);
                assert_eq!(decrypt_aggregate(&k, &c).unwrap(), big(m));
            }
        }
    }

    #[test]
    fn encrypt_rejects_bad_inputs() {
        let k = tiny();
        assert_eq!(
            encrypt(&k.public, &big(35), &big(2)),
            Err(PaillierError::PlaintextOutOfRange)
        );
        assert_eq!(encrypt(&k.public, &big(3), &big(5)), Err(PaillierError::BadRandomness));
        assert_eq!(encrypt(&k.public, &big(3), &big(0)), Err(PaillierError::BadRandomness));
        assert_eq!(
            decrypt_aggregate(&k, &Ciphertext(big(5 * 7))),
            Err(PaillierError::MalformedCiphertext)
        );
    }

    #[test]
    fn from_primes_rejects_degenerate_pairs() {
        assert!(PaillierKeys::from_primes(big(7), big(7)).is_err());
        assert!(PaillierKeys::from_primes(big(2), big(7)).is_err());
        // 3 · 7 = 21, (2 · 6) = 12 shares the factor 3.
        assert!(PaillierKeys::from_primes(big(3), big(7)).is_err());
    }

    #[test]
    fn keygen_is_deterministic() {
        let a = keygen(64, 1);
        let b = keygen(64, 1);
        assert_eq!(a.public.n(), b.public.n());
        assert_ne!(keygen(64, 2).public.n(), a.public.n());
        assert_eq!(a.public.bits(), 64);
        assert_eq!(keys256().public.bits(), 256);
    }

    #[test]
    fn roundtrip_random_plaintexts() {
        let k = keys256();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let zero = encrypt_with_rng(&k.public, &BigUint::zero(), &mut rng).unwrap();
        assert_eq!(decrypt_aggregate(k, &zero).unwrap(), BigUint::zero());
        for _ in 0..100 {
            let m = random_range(&mut rng, &BigUint::zero(), k.public.n());
            let c = encrypt_with_rng(&k.public, &m, &mut rng).unwrap();
            assert_eq!(decrypt_aggregate(k, &c).unwrap(), m);
        }
    }

    #[test]
    fn homomorphic_examples() {
        let k = keys256();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut e = |m: u64| encrypt_with_rng(&k.public, &big(m), &mut rng).unwrap();
        let s = add_encrypted(&k.public, &e(2), &e(3));
        assert_eq!(decrypt_aggregate(k, &s).unwrap(), big(5));
        let s = add_encrypted(&k.public, &e(9), &e(0));
        assert_eq!(decrypt_aggregate(k, &s).unwrap(), big(9));
        let s = [0u64, 4, 5, 6].iter().fold(e(0), |acc, &m| add_encrypted(&k.public, &acc, &e(m)));
        assert_eq!(decrypt_aggregate(k, &s).unwrap(), big(15));
        let zero = e(0);
        assert_eq!(decrypt_aggregate(k, &zero).unwrap(), big(0));
    }

    #[test]
    fn fold_matches_plain_sum() {
        let k = keys256();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..100 {
            let len = rng.random_range(1..8);
            let ms: Vec<BigUint> = (0..len)
                .map(|_| random_range(&mut rng, &BigUint::zero(), k.public.n()))
                .collect();
            let mut acc = encrypt(&k.public, &BigUint::zero(), &BigUint::one()).unwrap();
            for m in &ms {
                acc = add_encrypted(&k.public, &acc, &encrypt_with_rng(&k.public, m, &mut rng).unwrap());
            }
            let oracle = ms.iter().fold(BigUint::zero(), |a, m| a + m) % k.public.n();
            assert_eq!(decrypt_aggregate(k, &acc).unwrap(), oracle);
        }
    }

    #[test]
    fn inverse_cancels() {
        let k = keys256();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let a = encrypt_with_rng(&k.public, &big(40), &mut rng).unwrap();
        let b = encrypt_with_rng(&k.public, &big(2), &mut rng).unwrap();
        let sum = add_encrypted(&k.public, &a, &b);
        let back = add_encrypted(&k.public, &sum, &invert(&k.public, &a).unwrap());
        assert_eq!(decrypt_aggregate(k, &back).unwrap(), big(2));
    }

    #[test]
    fn miller_rabin_agrees_with_sieve() {
        let mut sieve = vec![true; 5000];
        sieve[0] = false;
        sieve[1] = false;
        for i in 2..5000 {
            if sieve[i] {
                for j in (i * i..5000).step_by(i) {
                    sieve[j] = false;
                }
            }
        }
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        for (i, &p) in sieve.iter().enumerate() {
            assert_eq!(is_probable_prime(&big(i as u64), &mut rng), p, "{i}");
        }
        // Carmichael numbers.
        for c in [561u64, 41041, 825265, 321197185] {
            assert!(!is_probable_prime(&big(c), &mut rng));
        }
    }

    #[test]
    fn keys_serialize_as_primes() {
        let k = keygen(64, 9);
        let text = serde_json::to_string(&k).unwrap();
        let back: PaillierKeys = serde_json::from_str(&text).unwrap();
        assert_eq!(back, k);
        assert!(serde_json::from_str::<PaillierKeys>(r#"{"p":"f","q":"b"}"#).is_err());
        let c = Ciphertext(big(0xabc));
        assert_eq!(serde_json::to_string(&c).unwrap(), "\"abc\"");
    }

    proptest! {
        #[test]
        fn homomorphism(a in any::<u128>(), b in any::<u128>(), seed in any::<u64>()) {
            let k = keys256();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let ca = encrypt_with_rng(&k.public, &BigUint::from(a), &mut rng).unwrap();
            let cb = encrypt_with_rng(&k.public, &BigUint::from(b), &mut rng).unwrap();
            let sum = decrypt_aggregate(k, &add_encrypted(&k.public, &ca, &cb)).unwrap();
            prop_assert_eq!(sum, BigUint::from(a) + BigUint::from(b));
        }

        #[test]
        fn encryption_is_randomized(m in any::<u64>(), r1 in 1u64.., r2 in 1u64..) {
            prop_assume!(r1 != r2);
            let k = keys256();
            let c1 = encrypt(&k.public, &big(m), &big(r1)).unwrap();
            let c2 = encrypt(&k.public, &big(m), &big(r2)).unwrap();
            prop_assert_ne!(c1, c2);
        }
    }
}
