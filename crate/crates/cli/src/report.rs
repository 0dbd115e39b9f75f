//! JSON reports printed by the subcommands.

use std::collections::BTreeMap;

use aggft::baseline::{BaselineOutcome, HashCheck, StuckReason};
use aggft::game::WinRate;
use aggft::protocol::{classify_steps, MalformedTrace};
use aggft::{PartyId, RoundOutcome, Scenario};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// SHA-256 of the canonical JSON form of a scenario.
pub fn digest(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(scenario.to_json().as_bytes()))
}

/// Send attempts by message kind. `total` is the trace length.
#[derive(Debug, Serialize)]
pub struct MessageCounts {
    pub initial_data: usize,
    pub activation: usize,
    pub ack_s: usize,
    pub end_of_round: usize,
    pub total: usize,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub scenario_digest: String,
    pub backend: &'static str,
    pub n_sm: u32,
    /// `null` when the DC obtained no aggregate.
    pub aggregate: Option<u64>,
    pub remaining_at_init: Vec<u32>,
    pub active: Vec<u32>,
    pub active_count: usize,
    pub eor_sender: Option<PartyId>,
    pub steps: usize,
    pub message_steps: usize,
    pub elapsed: u64,
    pub messages: MessageCounts,
    /// Occurrences of each proof case, keyed by label.
    pub proof_cases: BTreeMap<&'static str, usize>,
}

impl RunReport {
    pub fn new(scenario: &Scenario, out: &RoundOutcome) -> Result<Self, MalformedTrace> {
        let mut proof_cases: BTreeMap<_, _> = ["C1", "C2", "C3_1", "C3_2"].into_iter().map(|l| (l, 0)).collect();
        for case in classify_steps(out)? {
            *proof_cases.entry(case.label()).or_default() += 1;
        }
        let [initial_data, activation, ack_s, end_of_round] = out.counts_by_kind();
        Ok(RunReport {
            scenario_digest: digest(scenario),
            backend: scenario.backend.name(),
            n_sm: scenario.n_sm,
            aggregate: out.aggregate,
            remaining_at_init: out.remaining_at_init.clone(),
            active: out.active.clone(),
            active_count: out.active.len(),
            eor_sender: out.eor_sender,
            steps: out.steps,
            message_steps: out.message_steps(),
            elapsed: out.elapsed,
            messages: MessageCounts {
                initial_data,
                activation,
                ack_s,
                end_of_round,
                total: out.trace.len(),
            },
            proof_cases,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct BaselineSummary {
    pub status: &'static str,
    pub aggregate: Option<u64>,
    pub active: Vec<u32>,
    pub reported: Vec<u32>,
    pub steps: usize,
    pub elapsed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stuck: Option<StuckReason>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed_checks: Vec<HashCheck>,
}

impl From<&BaselineOutcome> for BaselineSummary {
    fn from(b: &BaselineOutcome) -> Self {
        let run = b.run();
        let (stuck, failed_checks) = match b {
            BaselineOutcome::Completed { .. } => (None, vec![]),
            BaselineOutcome::Stuck { reason, .. } => (Some(*reason), vec![]),
            BaselineOutcome::DetectedInconsistency { failed, .. } => (None, failed.clone()),
        };
        BaselineSummary {
            status: b.status(),
            aggregate: b.aggregate(),
            active: run.active.clone(),
            reported: run.reported.clone(),
            steps: run.steps,
            elapsed: run.elapsed,
            stuck,
            failed_checks,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AggftSummary {
    pub status: &'static str,
    pub aggregate: Option<u64>,
    pub active: Vec<u32>,
    pub steps: usize,
    pub elapsed: u64,
}

impl From<&RoundOutcome> for AggftSummary {
    fn from(o: &RoundOutcome) -> Self {
        AggftSummary {
            status: "completed",
            aggregate: o.aggregate,
            active: o.active.clone(),
            steps: o.steps,
            elapsed: o.elapsed,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ComparisonReport {
    pub scenario_digest: String,
    pub aggft: AggftSummary,
    pub baseline: BaselineSummary,
}

#[derive(Debug, Serialize)]
pub struct GameReport {
    pub adversary: String,
    #[serde(flatten)]
    pub result: WinRate,
}
