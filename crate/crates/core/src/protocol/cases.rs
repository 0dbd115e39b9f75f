use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{PartyId, ProtocolMessage, RoundOutcome};
use crate::net::TraceRecord;

/// How an active meter hands off control.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProofCase {
    /// Nothing left to contact: the meter sends the end-of-round message.
    C1,
    /// The next meter acknowledged the activation.
    C2,
    /// The next meter did not answer and the meter became the last one.
    C3_1,
    /// The next meter did not answer and the meter tries another one.
    C3_2,
}

impl ProofCase {
    pub fn label(self) -> &'static str {
        match self {
            ProofCase::C1 => "C1",
            ProofCase::C2 => "C2",
            ProofCase::C3_1 => "C3_1",
            ProofCase::C3_2 => "C3_2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed trace at record {index}: {reason}")]
pub struct MalformedTrace {
    pub index: usize,
    pub reason: &'static str,
}

fn malformed(index: usize, reason: &'static str) -> MalformedTrace {
    MalformedTrace { index, reason }
}

/// Labels every hand-off decision taken by an active meter. A failed
/// activation is labelled by what its sender did next; an end-of-round
/// message directly after such a failure carries no label of its own.
pub fn classify_steps(outcome: &RoundOutcome) -> Result<Vec<ProofCase>, MalformedTrace> {
    let records: Vec<(usize, &TraceRecord<ProtocolMessage>)> = outcome
        .trace
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            matches!(
                r.message,
                ProtocolMessage::Activation { .. } | ProtocolMessage::EndOfRound { .. }
            )
        })
        .collect();
    let mut labels = Vec::new();
    for (pos, &(index, r)) in records.iter().enumerate() {
        let after_failure = pos > 0 && {
            let (_, prev) = records[pos - 1];
            !prev.delivered && prev.from == r.from
        };
        match (&r.message, r.from) {
            (ProtocolMessage::Activation { .. }, PartyId::Dc) => {
                if !r.delivered {
                    return Err(malformed(index, "activation from the DC was lost"));
                }
            }
            (ProtocolMessage::Activation { .. }, from) => {
                if after_failure {
                    labels.push(ProofCase::C3_2);
                } else if pos > 0 && !records[pos - 1].1.delivered {
                    return Err(malformed(index, "failed activation not followed up by its sender"));
                }
                if r.delivered {
                    labels.push(ProofCase::C2);
                } else if pos + 1 == records.len() {
                    return Err(malformed(index, "trace ends after a failed activation"));
                } else if records[pos + 1].1.from != from {
                    return Err(malformed(index, "failed activation not followed up by its sender"));
                }
            }
            (ProtocolMessage::EndOfRound { .. }, from) => {
                if from.is_dc() {
                    return Err(malformed(index, "end of round sent by the DC"));
                }
                if pos + 1 != records.len() {
                    return Err(malformed(index, "messages after the end of round"));
                }
                labels.push(if after_failure { ProofCase::C3_1 } else { ProofCase::C1 });
            }
            _ => unreachable!("filtered above"),
        }
    }
    match (records.is_empty(), labels.last()) {
        (true, _) => Ok(labels),
        (false, Some(ProofCase::C1 | ProofCase::C3_1)) => Ok(labels),
        (false, _) => Err(malformed(outcome.trace.len(), "round does not end with C1 or C3_1")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{five_sm_scenario, four_sm_scenario};
    use crate::model::{BackendKind, FailureGraph, Scenario};
    use crate::protocol::run_scenario;
    use ProofCase::*;

    const MASK: BackendKind = BackendKind::Masking { k_bits: 32 };

    fn complete(n: u32, n_min: u32) -> Scenario {
        let mut s = five_sm_scenario(MASK);
        s.n_sm = n;
        s.graph = FailureGraph::complete(n);
        s.sending_list = crate::model::SendingList::new((1..=n).collect());
        s.measurements = (1..=n).map(|i| (i, u64::from(i))).collect();
        s.n_min = n_min;
        s
    }

    #[test]
    fn fully_connected_is_c2_then_c1() {
        let out = run_scenario(complete(6, 6)).unwrap();
        assert_eq!(classify_steps(&out).unwrap(), [C2, C2, C2, C2, C2, C1]);
    }

    #[test]
    fn five_meter_skip_is_c3_2() {
        let out = run_scenario(five_sm_scenario(MASK)).unwrap();
        // DC→1 unlabelled, 1→3 C2, 3→4 fails then 3→5: C3_2 C2, 5 ends: C1.
        assert_eq!(classify_steps(&out).unwrap(), [C2, C3_2, C2, C1]);
    }

    #[test]
    fn four_meter_network() {
        let out = run_scenario(four_sm_scenario(MASK)).unwrap();
        assert_eq!(classify_steps(&out).unwrap(), [C2, C1]);
    }

    #[test]
    fn unreachable_successor_with_too_few_left_is_c3_1() {
        // 1 → 2 works, 2 → 3 is down, three meters are required.
        let mut s = complete(3, 3);
        let off = crate::model::Edge::new(PartyId::Sm(2), PartyId::Sm(3)).unwrap();
        let working: Vec<_> = s.graph.working().iter().filter(|&&e| e != off).map(|e| e.endpoints()).collect();
        s.graph = s.graph.with_working(working).unwrap();
        let out = run_scenario(s).unwrap();
        assert_eq!(out.aggregate, None);
        assert_eq!(out.eor_sender, Some(PartyId::Sm(2)));
        assert_eq!(classify_steps(&out).unwrap(), [C2, C3_1]);
    }

    #[test]
    fn stopped_round_has_no_labels() {
        let mut s = four_sm_scenario(MASK);
        s.n_min = 3;
        let out = run_scenario(s).unwrap();
        assert!(out.active.is_empty());
        assert_eq!(classify_steps(&out).unwrap(), []);
    }

    #[test]
    fn truncated_trace_is_malformed() {
        let mut out = run_scenario(five_sm_scenario(MASK)).unwrap();
        out.trace.pop();
        assert!(classify_steps(&out).is_err());
        let mut out = run_scenario(five_sm_scenario(MASK)).unwrap();
        // Drop 3 → 5 and everything after: trace ends on a failure.
        let cut = out.trace.iter().position(|r| !r.delivered && r.to == PartyId::Sm(4)).unwrap();
        out.trace.truncate(cut + 1);
        assert!(classify_steps(&out).is_err());
    }
}
