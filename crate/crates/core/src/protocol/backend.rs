//! The computation plugged into the message flow: how `S` starts, how a
//! meter folds itself in, and how the DC turns the final `S` into `A_t`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::masking::{self, MaskShare, MaskingError, MaskingParams, Modulus, PrfKey};
use crate::model::{BackendKind, ShareState, ValidScenario};
use crate::paillier::{self, Ciphertext, PaillierError, PaillierKeys};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error(transparent)]
    Masking(#[from] MaskingError),
    #[error(transparent)]
    Paillier(#[from] PaillierError),
    #[error("share of the wrong kind for the {0} backend")]
    WrongShareKind(&'static str),
    #[error("SM{0} has no measurement")]
    UnknownMeter(u32),
    #[error("SM{0} is active but sent no initial data")]
    MissingInitialData(u32),
    #[error("decrypted aggregate does not fit in 64 bits")]
    AggregateOverflow,
}

pub trait ComputationBackend {
    /// State the DC keeps between starting and finishing the round.
    type Aux;

    fn name(&self) -> &'static str;

    /// Payload of meter `sm`'s initial message for round `t`.
    fn initial_payload(&self, sm: u32, t: u64) -> Result<Option<u64>, BackendError>;

    /// DC side: the first `S`.
    fn init_share(&self) -> Result<(Self::Aux, ShareState), BackendError>;

    /// Meter `sm` adds its contribution to `S`.
    fn fold_measurement(&self, share: &ShareState, sm: u32) -> Result<ShareState, BackendError>;

    /// DC side: `A_t` from the final `S`, or `None` when no share arrived.
    fn finalize(
        &self,
        share: Option<&ShareState>,
        active: &[u32],
        collected: &BTreeMap<u32, Option<u64>>,
        aux: &Self::Aux,
    ) -> Result<Option<u64>, BackendError>;
}

/// Additive masking: `S` is a sum of random shares, the DC learns masked
/// measurements up front.
#[derive(Debug, Clone)]
pub struct MaskingBackend {
    params: MaskingParams,
    shares: BTreeMap<u32, MaskShare>,
    measurements: BTreeMap<u32, u64>,
    round: u64,
}

impl MaskingBackend {
    pub fn new(scenario: &ValidScenario) -> Result<Self, BackendError> {
        let bits = match scenario.backend {
            BackendKind::Masking { k_bits } => k_bits,
            BackendKind::Paillier { .. } => return Err(BackendError::WrongShareKind("masking")),
        };
        let k = Modulus::from_bits(bits)?;
        // PRF keys are long-term; s_0 is fresh every round.
        let mut params = MaskingParams::derive(scenario.n_sm, k, scenario.seed, &scenario.prf_keys);
        params.dc_seed = seed::child(scenario.seed, "dc", &[scenario.round]);
        let shares = (1..=scenario.n_sm)
            .map(|i| {
                let mut rng = seed::rng(scenario.seed, "sm-share", &[scenario.round, u64::from(i)]);
                (i, MaskShare::new(k.sample(&mut rng), k).expect("sampled below k"))
            })
            .collect();
        Ok(MaskingBackend {
            params,
            shares,
            measurements: scenario.measurements.clone(),
            round: scenario.round,
        })
    }

    pub fn modulus(&self) -> Modulus {
        self.params.k
    }

    pub fn params(&self) -> &MaskingParams {
        &self.params
    }

    /// `s_0` as the DC will draw it.
    pub fn s0(&self) -> u64 {
        masking::init_share(&self.params).0
    }

    /// Meter `sm`'s fresh share `s_{i,t}`.
    pub fn share_of(&self, sm: u32) -> Option<MaskShare> {
        self.shares.get(&sm).copied()
    }

    pub fn prf_key(&self, sm: u32) -> Option<&PrfKey> {
        self.params.keys.get(&sm)
    }

    fn share(share: &ShareState) -> Result<u64, BackendError> {
        match share {
            ShareState::Masking(s) => Ok(*s),
            ShareState::Paillier(_) => Err(BackendError::WrongShareKind("masking")),
        }
    }
}

impl ComputationBackend for MaskingBackend {
    /// `s_0`.
    type Aux = u64;

    fn name(&self) -> &'static str {
        "masking"
    }

    fn initial_payload(&self, sm: u32, t: u64) -> Result<Option<u64>, BackendError> {
        let m = *self.measurements.get(&sm).ok_or(BackendError::UnknownMeter(sm))?;
        let s = self.shares[&sm];
        let p = masking::prf(&self.params.keys[&sm], t, self.params.k);
        Ok(Some(masking::mask(m, s, p, self.params.k)?))
    }

    fn init_share(&self) -> Result<(u64, ShareState), BackendError> {
        let (s0, s) = masking::init_share(&self.params);
        Ok((s0, ShareState::Masking(s.value())))
    }

    fn fold_measurement(&self, share: &ShareState, sm: u32) -> Result<ShareState, BackendError> {
        let k = self.params.k;
        let sum = MaskShare::new(Self::share(share)?, k)?;
        let s = *self.shares.get(&sm).ok_or(BackendError::UnknownMeter(sm))?;
        Ok(ShareState::Masking(masking::update_share(sum, s, k).value()))
    }

    fn finalize(
        &self,
        share: Option<&ShareState>,
        active: &[u32],
        collected: &BTreeMap<u32, Option<u64>>,
        s0: &u64,
    ) -> Result<Option<u64>, BackendError> {
        let Some(share) = share else { return Ok(None) };
        let k = self.params.k;
        let sum = MaskShare::new(Self::share(share)?, k)?;
        let t = self.round;
        let mut masked = BTreeMap::new();
        let mut prfs = BTreeMap::new();
        for &i in active {
            let m = collected
                .get(&i)
                .copied()
                .flatten()
                .ok_or(BackendError::MissingInitialData(i))?;
            let key = self.params.keys.get(&i).ok_or(BackendError::UnknownMeter(i))?;
            masked.insert(i, m);
            prfs.insert(i, masking::prf(key, t, k));
        }
        Ok(Some(masking::unmask_aggregate(sum, *s0, &masked, &prfs, k)?))
    }
}

/// Additive homomorphic encryption: `S` is a product of ciphertexts, the
/// DC decrypts it. Initial messages carry nothing.
#[derive(Debug, Clone)]
pub struct PaillierBackend {
    keys: PaillierKeys,
    measurements: BTreeMap<u32, u64>,
    seed: u64,
    round: u64,
}

impl PaillierBackend {
    /// Generates a key pair of the scenario's size from its seed.
    pub fn new(scenario: &ValidScenario) -> Result<Self, BackendError> {
        let bits = match scenario.backend {
            BackendKind::Paillier { key_bits } => key_bits,
            BackendKind::Masking { .. } => return Err(BackendError::WrongShareKind("paillier")),
        };
        let keys = paillier::keygen(bits, seed::child(scenario.seed, "paillier", &[]));
        Ok(Self::with_keys(scenario, keys))
    }

    pub fn with_keys(scenario: &ValidScenario, keys: PaillierKeys) -> Self {
        PaillierBackend {
            keys,
            measurements: scenario.measurements.clone(),
            seed: scenario.seed,
            round: scenario.round,
        }
    }

    pub fn keys(&self) -> &PaillierKeys {
        &self.keys
    }

    fn encrypt(&self, m: u64, label: &str, path: &[u64]) -> Result<Ciphertext, BackendError> {
        let mut rng = seed::rng(self.seed, label, path);
        Ok(paillier::encrypt_with_rng(&self.keys.public, &BigUint::from(m), &mut rng)?)
    }

    fn share(share: &ShareState) -> Result<&Ciphertext, BackendError> {
        match share {
            ShareState::Paillier(c) => Ok(c),
            ShareState::Masking(_) => Err(BackendError::WrongShareKind("paillier")),
        }
    }
}

impl ComputationBackend for PaillierBackend {
    type Aux = ();

    fn name(&self) -> &'static str {
        "paillier"
    }

    fn initial_payload(&self, sm: u32, _t: u64) -> Result<Option<u64>, BackendError> {
        if self.measurements.contains_key(&sm) {
            Ok(None)
        } else {
            Err(BackendError::UnknownMeter(sm))
        }
    }

    fn init_share(&self) -> Result<((), ShareState), BackendError> {
        let c = self.encrypt(0, "paillier-r0", &[self.round])?;
        Ok(((), ShareState::Paillier(c)))
    }

    fn fold_measurement(&self, share: &ShareState, sm: u32) -> Result<ShareState, BackendError> {
        let s = Self::share(share)?;
        let m = *self.measurements.get(&sm).ok_or(BackendError::UnknownMeter(sm))?;
        let c = self.encrypt(m, "paillier-r", &[self.round, u64::from(sm)])?;
        Ok(ShareState::Paillier(paillier::add_encrypted(&self.keys.public, s, &c)))
    }

    fn finalize(
        &self,
        share: Option<&ShareState>,
        _active: &[u32],
        _collected: &BTreeMap<u32, Option<u64>>,
        _aux: &(),
    ) -> Result<Option<u64>, BackendError> {
        let Some(share) = share else { return Ok(None) };
        let a = paillier::decrypt_aggregate(&self.keys, Self::share(share)?)?;
        u64::try_from(a).map(Some).map_err(|_| BackendError::AggregateOverflow)
    }
}

/// Either backend, chosen by the scenario.
#[derive(Debug, Clone)]
pub enum AnyBackend {
    Masking(MaskingBackend),
    Paillier(PaillierBackend),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyAux {
    Masking(u64),
    Paillier,
}

impl AnyBackend {
    pub fn for_scenario(scenario: &ValidScenario) -> Result<Self, BackendError> {
        Ok(match scenario.backend {
            BackendKind::Masking { .. } => AnyBackend::Masking(MaskingBackend::new(scenario)?),
            BackendKind::Paillier { .. } => AnyBackend::Paillier(PaillierBackend::new(scenario)?),
        })
    }
}

impl ComputationBackend for AnyBackend {
    type Aux = AnyAux;

    fn name(&self) -> &'static str {
        match self {
            AnyBackend::Masking(b) => b.name(),
            AnyBackend::Paillier(b) => b.name(),
        }
    }

    fn initial_payload(&self, sm: u32, t: u64) -> Result<Option<u64>, BackendError> {
        match self {
            AnyBackend::Masking(b) => b.initial_payload(sm, t),
            AnyBackend::Paillier(b) => b.initial_payload(sm, t),
        }
    }

    fn init_share(&self) -> Result<(AnyAux, ShareState), BackendError> {
        match self {
            AnyBackend::Masking(b) => b.init_share().map(|(s0, s)| (AnyAux::Masking(s0), s)),
            AnyBackend::Paillier(b) => b.init_share().map(|((), s)| (AnyAux::Paillier, s)),
        }
    }

    fn fold_measurement(&self, share: &ShareState, sm: u32) -> Result<ShareState, BackendError> {
        match self {
            AnyBackend::Masking(b) => b.fold_measurement(share, sm),
            AnyBackend::Paillier(b) => b.fold_measurement(share, sm),
        }
    }

    fn finalize(
        &self,
        share: Option<&ShareState>,
        active: &[u32],
        collected: &BTreeMap<u32, Option<u64>>,
        aux: &AnyAux,
    ) -> Result<Option<u64>, BackendError> {
        match (self, aux) {
            (AnyBackend::Masking(b), AnyAux::Masking(s0)) => b.finalize(share, active, collected, s0),
            (AnyBackend::Paillier(b), AnyAux::Paillier) => b.finalize(share, active, collected, &()),
            (b, _) => Err(BackendError::WrongShareKind(b.name())),
        }
    }
}
