//! Named adversary strategies.

use sha2::{Digest, Sha256};

use super::attacks::{recover_he, recover_masking};
use super::setup::Strategy;
use super::view::AdversaryView;
use crate::model::{PartyId, ProtocolMessage};

/// Ignores the view.
pub fn coin_flip(view: &AdversaryView) -> u8 {
    (view.coins & 1) as u8
}

/// Reduces the aggregate to `m_b + m_{1-b}` and guesses from that alone.
pub fn sum_only(view: &AdversaryView) -> u8 {
    let Some(aggregate) = view.dc_secrets.as_ref().and_then(|d| d.aggregate) else {
        return coin_flip(view);
    };
    let reported = view.messages.iter().find_map(|r| match &r.message {
        ProtocolMessage::EndOfRound { active, .. } if r.to == PartyId::Dc => Some(active),
        _ => None,
    });
    let others: u64 = reported
        .into_iter()
        .flatten()
        .filter(|i| !view.challenged.contains(i))
        .filter_map(|&i| view.mlist.get(&PartyId::Sm(i)))
        .fold(0u64, |a, &m| a.wrapping_add(m));
    let pair_sum = aggregate.wrapping_sub(others);
    let h = Sha256::digest(pair_sum.to_be_bytes());
    h[0] & 1
}

/// One bit of a hash over the whole view.
pub fn transcript_hash(view: &AdversaryView) -> u8 {
    Sha256::digest(view.to_json().as_bytes())[0] & 1
}

fn guess_from(view: &AdversaryView, recovered: Option<u64>) -> u8 {
    match recovered {
        Some(m) if m == view.m0 => 0,
        Some(m) if m == view.m1 => 1,
        _ => coin_flip(view),
    }
}

pub fn masking_dc_neighbor(view: &AdversaryView) -> u8 {
    guess_from(view, recover_masking(view).ok())
}

pub fn he_dc_neighbor(view: &AdversaryView) -> u8 {
    guess_from(view, recover_he(view).ok())
}

pub const STRATEGIES: &[(&str, Strategy)] = &[
    ("coin-flip", coin_flip),
    ("sum-only", sum_only),
    ("transcript-hash", transcript_hash),
    ("masking-dc-neighbor", masking_dc_neighbor),
    ("he-dc-neighbor", he_dc_neighbor),
];

pub fn strategy(name: &str) -> Option<Strategy> {
    STRATEGIES.iter().find(|(n, _)| *n == name).map(|&(_, s)| s)
}
