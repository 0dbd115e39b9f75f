use serde::{Deserialize, Serialize};

use crate::net::MessageKind;
use crate::paillier::Ciphertext;

/// The running aggregate `S` handed from meter to meter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareState {
    /// Sum of shares in `Z_k`.
    Masking(u64),
    /// Product of ciphertexts in `Z_{n²}`.
    Paillier(Ciphertext),
}

/// The four message kinds exchanged by the fault-tolerant protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolMessage {
    /// `⟨t, i, data_i⟩` from a meter to the DC. The payload is the masked
    /// measurement under masking and absent under homomorphic encryption.
    InitialData {
        round: u64,
        sm: u32,
        payload: Option<u64>,
    },
    /// `⟨S, L_rem, L_act⟩`; activates the receiver.
    Activation {
        share: ShareState,
        remaining: Vec<u32>,
        active: Vec<u32>,
    },
    /// Confirms an activation handoff.
    AckS,
    /// `⟨EOR_t, S, L_act⟩` to the DC. `share` is `None` exactly when too few
    /// meters could contribute, in which case `active` is empty as well.
    EndOfRound {
        round: u64,
        share: Option<ShareState>,
        active: Vec<u32>,
    },
}

impl MessageKind for ProtocolMessage {
    fn kind(&self) -> &'static str {
        match self {
            ProtocolMessage::InitialData { .. } => "initial_data",
            ProtocolMessage::Activation { .. } => "activation",
            ProtocolMessage::AckS => "ack_s",
            ProtocolMessage::EndOfRound { .. } => "end_of_round",
        }
    }
}
