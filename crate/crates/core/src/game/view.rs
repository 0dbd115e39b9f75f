use std::collections::BTreeMap;

use serde::Serialize;

use super::setup::{Corruption, GameSetup};
use crate::masking::PrfKey;
use crate::model::{PartyId, ProtocolMessage, RoundOutcome, ShareState, ValidScenario};
use crate::net::TraceRecord;
use crate::paillier::{PaillierKeys, PublicKey};
use crate::protocol::AnyBackend;
use crate::seed;

/// Internal state of a corrupted meter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmSecrets {
    pub measurement: u64,
    /// `s_i` under masking.
    pub share: Option<u64>,
    pub prf_key: Option<PrfKey>,
}

/// Internal state of a corrupted DC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DcSecrets {
    pub s0: Option<u64>,
    pub prf_keys: BTreeMap<u32, PrfKey>,
    pub paillier: Option<PaillierKeys>,
    pub aggregate: Option<u64>,
}

/// Everything an adversary strategy may look at. Strategies receive
/// nothing else from the challenger.
#[derive(Debug, Clone, Serialize)]
pub struct AdversaryView {
    pub corruption: Corruption,
    pub n_sm: u32,
    pub round: u64,
    pub n_min: u32,
    pub k_bits: Option<u32>,
    pub public_key: Option<PublicKey>,
    pub edges: Vec<[PartyId; 2]>,
    pub working_edges: Vec<[PartyId; 2]>,
    pub sending_list: Vec<PartyId>,
    pub challenged: [u32; 2],
    pub m0: u64,
    pub m1: u64,
    pub mlist: BTreeMap<PartyId, u64>,
    /// Messages delivered to or sent by corrupted parties, in order.
    pub messages: Vec<TraceRecord<ProtocolMessage>>,
    pub sm_secrets: BTreeMap<u32, SmSecrets>,
    pub dc_secrets: Option<DcSecrets>,
    /// Private randomness of the adversary.
    pub coins: u64,
}

impl AdversaryView {
    pub(super) fn build(setup: &GameSetup, scenario: &ValidScenario, backend: &AnyBackend, outcome: &RoundOutcome) -> Self {
        let corr = &setup.corruption;
        let messages = outcome
            .trace
            .iter()
            .filter(|r| corr.contains(r.from) || (r.delivered && corr.contains(r.to)))
            .cloned()
            .collect();
        let sm_secrets = corr
            .sms
            .iter()
            .filter_map(|&i| {
                let measurement = *scenario.measurements.get(&i)?;
                let (share, prf_key) = match backend {
                    AnyBackend::Masking(b) => (b.share_of(i).map(|s| s.value()), b.prf_key(i).copied()),
                    AnyBackend::Paillier(_) => (None, None),
                };
                Some((i, SmSecrets { measurement, share, prf_key }))
            })
            .collect();
        let dc_secrets = corr.dc.then(|| match backend {
            AnyBackend::Masking(b) => DcSecrets {
                s0: Some(b.s0()),
                prf_keys: b.params().keys.clone(),
                paillier: None,
                aggregate: outcome.aggregate,
            },
            AnyBackend::Paillier(b) => DcSecrets {
                s0: None,
                prf_keys: BTreeMap::new(),
                paillier: Some(b.keys().clone()),
                aggregate: outcome.aggregate,
            },
        });
        let (k_bits, public_key) = match backend {
            AnyBackend::Masking(b) => (Some(b.modulus().bits()), None),
            AnyBackend::Paillier(b) => (None, Some(b.keys().public.clone())),
        };
        AdversaryView {
            corruption: corr.clone(),
            n_sm: setup.n_sm,
            round: setup.round,
            n_min: setup.n_min,
            k_bits,
            public_key,
            edges: setup.edges.clone(),
            working_edges: setup.working_edges.clone(),
            sending_list: setup.sending_list.clone(),
            challenged: setup.challenged,
            m0: setup.m0,
            m1: setup.m1,
            mlist: setup.mlist.clone(),
            messages,
            sm_secrets,
            dc_secrets,
            coins: seed::child(setup.seed, "adversary-coins", &[]),
        }
    }

    /// The delivered activation whose receiver is `to`, if the adversary saw it.
    pub fn activation_into(&self, to: PartyId) -> Option<(PartyId, &ShareState)> {
        self.messages.iter().find_map(|r| match &r.message {
            ProtocolMessage::Activation { share, .. } if r.delivered && r.to == to => Some((r.from, share)),
            _ => None,
        })
    }

    /// The delivered activation sent by `from`, if the adversary saw it.
    pub fn activation_from(&self, from: PartyId) -> Option<(PartyId, &ShareState)> {
        self.messages.iter().find_map(|r| match &r.message {
            ProtocolMessage::Activation { share, .. } if r.delivered && r.from == from => Some((r.to, share)),
            _ => None,
        })
    }

    /// The masked value meter `i` sent to the DC, if the DC is corrupted.
    pub fn initial_payload(&self, i: u32) -> Option<u64> {
        self.messages.iter().find_map(|r| match r.message {
            ProtocolMessage::InitialData { sm, payload, .. } if r.delivered && sm == i && r.to == PartyId::Dc => payload,
            _ => None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("views serialize")
    }
}
