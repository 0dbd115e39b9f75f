//! Challenger/distinguisher drivers for PRG indistinguishability and
//! IND-CPA, used to sanity-check the randomness behind both backends.

use num_bigint::BigUint;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::stats::WinRate;
use crate::masking::{prf, Modulus, PrfKey};
use crate::paillier::{self, Ciphertext, PublicKey};
use crate::seed;

/// Each trial: draw `b`; give the distinguisher `prg(seed)` if `b = 1` and
/// uniform words if `b = 0`; the distinguisher wins by naming `b`.
pub fn prg_experiment<G, D>(prg: G, distinguisher: D, len: usize, trials: usize, seed: u64) -> WinRate
where
    G: Fn(&PrfKey, usize) -> Vec<u64> + Sync,
    D: Fn(&[u64]) -> u8 + Sync,
{
    let wins = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = seed::rng(seed, "prg-trial", &[t as u64]);
            let b: u8 = rng.random_range(0..=1);
            let sample = if b == 1 {
                prg(&PrfKey::random(&mut rng), len)
            } else {
                (0..len).map(|_| rng.next_u64()).collect()
            };
            distinguisher(&sample) == b
        })
        .count();
    WinRate::new(wins, trials, 0)
}

/// The masking pad stream `PRF_key(0), PRF_key(1), ..` over `Z_{2^64}`.
pub fn masking_pad_stream(key: &PrfKey, len: usize) -> Vec<u64> {
    let k = Modulus::from_bits(64).expect("64 bits");
    (0..len as u64).map(|t| prf(key, t, k)).collect()
}

/// A public-key encryption scheme under test.
pub trait Encryptor: Sync {
    type Ct: PartialEq + Send;
    fn encrypt(&self, m: u64, rng: &mut ChaCha20Rng) -> Self::Ct;
}

/// Paillier with fresh randomness per encryption.
pub struct PaillierEncryptor(pub PublicKey);

impl Encryptor for PaillierEncryptor {
    type Ct = Ciphertext;
    fn encrypt(&self, m: u64, rng: &mut ChaCha20Rng) -> Ciphertext {
        paillier::encrypt_with_rng(&self.0, &BigUint::from(m), rng).expect("m < n")
    }
}

/// Paillier with `r = 1`: deterministic and therefore not IND-CPA.
pub struct DeterministicPaillier(pub PublicKey);

impl Encryptor for DeterministicPaillier {
    type Ct = Ciphertext;
    fn encrypt(&self, m: u64, _rng: &mut ChaCha20Rng) -> Ciphertext {
        paillier::encrypt(&self.0, &BigUint::from(m), &BigUint::from(1u32)).expect("m < n")
    }
}

/// Each trial: draw `b`, encrypt `m_b`, and let the adversary guess `b`
/// from the ciphertext. The adversary gets its own randomness and may
/// encrypt on its own.
pub fn ind_cpa_experiment<E, A>(scheme: &E, m0: u64, m1: u64, adversary: A, trials: usize, seed: u64) -> WinRate
where
    E: Encryptor,
    A: Fn(&E, u64, u64, &E::Ct, &mut ChaCha20Rng) -> u8 + Sync,
{
    let wins = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut challenger = seed::rng(seed, "cpa-challenger", &[t as u64]);
            let mut own = seed::rng(seed, "cpa-adversary", &[t as u64]);
            let b: u8 = challenger.random_range(0..=1);
            let c = scheme.encrypt(if b == 0 { m0 } else { m1 }, &mut challenger);
            adversary(scheme, m0, m1, &c, &mut own) == b
        })
        .count();
    WinRate::new(wins, trials, 0)
}

/// Encrypts `m_0` itself and answers 0 on a match.
pub fn reencrypt_and_compare<E: Encryptor>(scheme: &E, m0: u64, _m1: u64, c: &E::Ct, rng: &mut ChaCha20Rng) -> u8 {
    u8::from(scheme.encrypt(m0, rng) != *c)
}
