//! Recovery of `m_{i*}` by a corrupted DC together with a corrupted meter
//! that follows `i*` in the activation chain.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::setup::{challenge, AbortReason, GameSetup};
use super::view::AdversaryView;
use crate::masking::{prf, Modulus};
use crate::model::{PartyId, ShareState};
use crate::paillier;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(rename_all = "snake_case")]
pub enum SetupViolation {
    #[error("the attack needs a corrupted DC")]
    DcNotCorrupted,
    #[error("no corrupted meter received S from the target")]
    NoCorruptedSuccessor,
    #[error("the share the target received is not in the view")]
    PredecessorHidden,
    #[error("the view belongs to the other backend")]
    WrongBackend,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("challenger aborted: {0}")]
    Abort(AbortReason),
    #[error(transparent)]
    Violation(#[from] SetupViolation),
}

/// Result of running an attack against a fresh challenge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recovery {
    pub recovered: u64,
    pub actual: u64,
}

/// `(S_prev, S_{i*})` around the target as seen by the adversary.
fn shares_around(view: &AdversaryView) -> Result<(&ShareState, &ShareState), SetupViolation> {
    let target = PartyId::Sm(view.challenged[0]);
    let (_, s_i) = view
        .activation_from(target)
        .ok_or(SetupViolation::NoCorruptedSuccessor)?;
    let (_, s_prev) = view
        .activation_into(target)
        .ok_or(SetupViolation::PredecessorHidden)?;
    Ok((s_prev, s_i))
}

/// `m = m̃ - (S_{i*} - S_prev) - PRF_{k_{i*}}(t) mod k`.
pub fn recover_masking(view: &AdversaryView) -> Result<u64, SetupViolation> {
    let dc = view.dc_secrets.as_ref().ok_or(SetupViolation::DcNotCorrupted)?;
    let bits = view.k_bits.ok_or(SetupViolation::WrongBackend)?;
    let k = Modulus::from_bits(bits).map_err(|_| SetupViolation::WrongBackend)?;
    let target = view.challenged[0];
    let (ShareState::Masking(prev), ShareState::Masking(s_i)) = shares_around(view)? else {
        return Err(SetupViolation::WrongBackend);
    };
    let masked = view.initial_payload(target).ok_or(SetupViolation::WrongBackend)?;
    let key = dc.prf_keys.get(&target).ok_or(SetupViolation::WrongBackend)?;
    Ok(k.sub(k.sub(masked, k.sub(*s_i, *prev)), prf(key, view.round, k)))
}

/// `m = D_sk(S_{i*} · S_prev^{-1})`.
pub fn recover_he(view: &AdversaryView) -> Result<u64, SetupViolation> {
    let dc = view.dc_secrets.as_ref().ok_or(SetupViolation::DcNotCorrupted)?;
    let sk = dc.paillier.as_ref().ok_or(SetupViolation::WrongBackend)?;
    let (ShareState::Paillier(prev), ShareState::Paillier(s_i)) = shares_around(view)? else {
        return Err(SetupViolation::WrongBackend);
    };
    let inv = paillier::invert(&sk.public, prev).map_err(|_| SetupViolation::WrongBackend)?;
    let c = paillier::add_encrypted(&sk.public, s_i, &inv);
    let m: BigUint = paillier::decrypt_aggregate(sk, &c).map_err(|_| SetupViolation::WrongBackend)?;
    u64::try_from(m).map_err(|_| SetupViolation::WrongBackend)
}

fn run_attack(setup: &GameSetup, recover: fn(&AdversaryView) -> Result<u64, SetupViolation>) -> Result<Recovery, AttackError> {
    let c = challenge(setup).map_err(AttackError::Abort)?;
    Ok(Recovery {
        recovered: recover(&c.view)?,
        actual: c.m_i,
    })
}

pub fn attack_masking_dc_plus_neighbor(setup: &GameSetup) -> Result<Recovery, AttackError> {
    run_attack(setup, recover_masking)
}

pub fn attack_he_dc_plus_neighbor(setup: &GameSetup) -> Result<Recovery, AttackError> {
    run_attack(setup, recover_he)
}
