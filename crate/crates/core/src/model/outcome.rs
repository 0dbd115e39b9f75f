use serde::{Deserialize, Serialize};

use super::{PartyId, ProtocolMessage};
use crate::net::TraceRecord;

/// Terminal state of one aggregation round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    /// `A_t`, or `None` when the DC could not obtain an aggregate.
    pub aggregate: Option<u64>,
    /// Meters that became active, in activation order.
    pub active: Vec<u32>,
    /// `L_rem` as formed by the DC after collecting initial data.
    pub remaining_at_init: Vec<u32>,
    /// `L_act` as carried by the end-of-round message (empty when the
    /// `N_min` check failed).
    pub reported_active: Vec<u32>,
    /// Sender of the end-of-round message, if one was sent.
    pub eor_sender: Option<PartyId>,
    pub trace: Vec<TraceRecord<ProtocolMessage>>,
    /// Number of send attempts the round took.
    pub steps: usize,
    /// Virtual time in ticks when the round finished.
    pub elapsed: u64,
    pub terminated: bool,
}

impl RoundOutcome {
    /// Receivers of delivered activations, in order. A meter appearing twice
    /// would mean it was activated twice.
    pub fn activation_receivers(&self) -> Vec<PartyId> {
        self.trace
            .iter()
            .filter(|r| r.delivered && matches!(r.message, ProtocolMessage::Activation { .. }))
            .map(|r| r.to)
            .collect()
    }

    /// Number of distinct message steps, where the concurrent initial-data
    /// broadcast counts once.
    pub fn message_steps(&self) -> usize {
        let mut steps: Vec<_> = self.trace.iter().map(|r| r.step).collect();
        steps.dedup();
        steps.len()
    }

    /// `(initial_data, activation, ack_s, end_of_round)` attempt counts.
    pub fn counts_by_kind(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for r in &self.trace {
            let slot = match r.message {
                ProtocolMessage::InitialData { .. } => 0,
                ProtocolMessage::Activation { .. } => 1,
                ProtocolMessage::AckS => 2,
                ProtocolMessage::EndOfRound { .. } => 3,
            };
            c[slot] += 1;
        }
        c
    }
}
