//! The earlier ring protocol with static shares and homomorphic hashes.
//!
//! Meters publish `m + s_t + s^0` to the DC as soon as they become active
//! and forward the running share sum to the next meter that acknowledges.
//! The last meter forwards to the DC. Nothing tells a meter what to do when
//! the DC itself cannot be reached, which is how the protocol gets stuck.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::masking::Modulus;
use crate::model::{BackendKind, PartyId, ValidScenario};
use crate::net::{MessageKind, NetError, SimNetwork, TraceRecord};
use crate::seed;

/// `H(x) = g^x mod p` in the order-`q` subgroup of `Z_p^*`, `p = 2q + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashGroup {
    pub p: BigUint,
    pub q: BigUint,
    pub g: BigUint,
}

impl HashGroup {
    /// A fixed 256-bit safe prime with generator 4.
    pub fn standard() -> Self {
        let p = BigUint::parse_bytes(b"ffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff72ef", 16)
            .expect("valid hex");
        let q = (&p - 1u32) >> 1;
        HashGroup {
            p,
            q,
            g: BigUint::from(4u32),
        }
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a * b % &self.p
    }

    pub fn pow(&self, a: &BigUint, e: u64) -> BigUint {
        a.modpow(&BigUint::from(e), &self.p)
    }
}

pub fn homomorphic_hash(x: impl Into<BigUint>, group: &HashGroup) -> BigUint {
    group.g.modpow(&x.into(), &group.p)
}

#[derive(Debug, Clone)]
pub struct BaselineParams {
    pub k: Modulus,
    /// `s_i^0`, known to meter `i` and the DC.
    pub static_shares: BTreeMap<u32, u64>,
    pub group: HashGroup,
    seed: u64,
}

impl BaselineParams {
    pub fn derive(n_sm: u32, k: Modulus, seed: u64) -> Self {
        let static_shares = (1..=n_sm)
            .map(|i| (i, k.sample(&mut seed::rng(seed, "static-share", &[u64::from(i)]))))
            .collect();
        BaselineParams {
            k,
            static_shares,
            group: HashGroup::standard(),
            seed,
        }
    }

    /// Parameters for a scenario. A homomorphic-encryption scenario has no
    /// masking modulus and uses `k = 2^64`.
    pub fn for_scenario(scenario: &ValidScenario) -> Self {
        let bits = match scenario.backend {
            BackendKind::Masking { k_bits } => k_bits,
            BackendKind::Paillier { .. } => 64,
        };
        Self::derive(scenario.n_sm, Modulus::from_bits(bits).expect("validated"), scenario.seed)
    }

    /// `S^0 = Σ s_i^0`.
    pub fn static_sum(&self) -> u64 {
        self.static_shares.values().fold(0, |acc, &s| self.k.add(acc, s))
    }

    /// `s_{i,t}` for meter `i`, or `s_{0,t}` for `i = 0`.
    pub fn round_share(&self, i: u32, t: u64) -> u64 {
        self.k.sample(&mut seed::rng(self.seed, "baseline-share", &[t, u64::from(i)]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineMessage {
    /// A running share sum handed to the next party in the list.
    ShareForward { share: u64 },
    Ack,
    /// `m̃ || H(m) || H(s) || t` to the DC. Hashes are hex.
    MaskedReport {
        round: u64,
        masked: u64,
        hash_m: String,
        hash_s: String,
    },
}

impl MessageKind for BaselineMessage {
    fn kind(&self) -> &'static str {
        match self {
            BaselineMessage::ShareForward { .. } => "share_forward",
            BaselineMessage::Ack => "ack",
            BaselineMessage::MaskedReport { .. } => "masked_report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StuckReason {
    /// The DC reached no meter at all.
    NoReachableMeter,
    /// An active meter could reach neither a later meter nor the DC.
    NoInstruction { holder: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum HashCheck {
    ShareSum,
    Report { sm: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineRun {
    /// Meters that became active, in order.
    pub active: Vec<u32>,
    /// Meters whose masked report reached the DC.
    pub reported: Vec<u32>,
    pub trace: Vec<TraceRecord<BaselineMessage>>,
    pub steps: usize,
    pub elapsed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BaselineOutcome {
    Completed { aggregate: u64, run: BaselineRun },
    Stuck { reason: StuckReason, run: BaselineRun },
    DetectedInconsistency { failed: Vec<HashCheck>, run: BaselineRun },
}

impl BaselineOutcome {
    pub fn run(&self) -> &BaselineRun {
        match self {
            BaselineOutcome::Completed { run, .. }
            | BaselineOutcome::Stuck { run, .. }
            | BaselineOutcome::DetectedInconsistency { run, .. } => run,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            BaselineOutcome::Completed { .. } => "completed",
            BaselineOutcome::Stuck { .. } => "stuck",
            BaselineOutcome::DetectedInconsistency { .. } => "detected_inconsistency",
        }
    }

    pub fn aggregate(&self) -> Option<u64> {
        match self {
            BaselineOutcome::Completed { aggregate, .. } => Some(*aggregate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("SM{0} has no measurement")]
    UnknownMeter(u32),
}

pub fn default_step_cap(n: u32) -> usize {
    20 * n as usize
}

struct Report {
    masked: u64,
    hash_m: BigUint,
    hash_s: BigUint,
}

/// A fresh network for the baseline protocol.
pub fn baseline_network(scenario: &ValidScenario) -> SimNetwork<BaselineMessage> {
    let offline = (1..=scenario.n_sm).filter(|&i| !scenario.is_online(i));
    SimNetwork::new(scenario.graph.clone(), scenario.delta_t).with_offline(offline)
}

/// Runs one round of the baseline protocol. A round that cannot proceed
/// idles until `step_cap` steps have passed and is reported as stuck.
pub fn run_baseline_round(
    scenario: &ValidScenario,
    params: &BaselineParams,
    net: &mut SimNetwork<BaselineMessage>,
    step_cap: usize,
) -> Result<BaselineOutcome, BaselineError> {
    let k = params.k;
    let t = scenario.round;
    let group = &params.group;
    // L(1..=N) are meters, L(N+1) is the DC.
    let list: Vec<PartyId> = scenario
        .sending_list
        .order()
        .iter()
        .map(|&i| PartyId::Sm(i))
        .chain([PartyId::Dc])
        .collect();
    let n = scenario.n_sm as usize;

    let mut active = Vec::new();
    let mut reports: BTreeMap<u32, Report> = BTreeMap::new();
    let s0 = params.round_share(0, t);

    let stuck = |net: &mut SimNetwork<BaselineMessage>, reason, active: Vec<u32>, reports: &BTreeMap<u32, Report>| {
        let mut steps = net.trace().len();
        while steps < step_cap {
            net.idle(net.delta_t());
            steps += 1;
        }
        BaselineOutcome::Stuck {
            reason,
            run: BaselineRun {
                active,
                reported: reports.keys().copied().collect(),
                trace: net.trace().to_vec(),
                steps,
                elapsed: net.elapsed(),
            },
        }
    };

    // The DC looks for the first meter that answers.
    let mut pos = 0;
    loop {
        if pos >= n {
            return Ok(stuck(net, StuckReason::NoReachableMeter, active, &reports));
        }
        let msg = BaselineMessage::ShareForward { share: s0 };
        if net.send(PartyId::Dc, list[pos], msg)?.is_delivered() {
            break;
        }
        pos += 1;
    }
    let mut prev = PartyId::Dc;
    let mut share = s0;
    let final_share = loop {
        let Some(i) = list[pos].sm_index() else {
            // S_N reached the DC.
            net.send_ack(PartyId::Dc, prev, BaselineMessage::Ack)?;
            break share;
        };
        let me = PartyId::Sm(i);
        active.push(i);
        net.send_ack(me, prev, BaselineMessage::Ack)?;
        let m = *scenario.measurements.get(&i).ok_or(BaselineError::UnknownMeter(i))?;
        let s_it = params.round_share(i, t);
        let masked = k.add(k.add(m, s_it), params.static_shares[&i]);
        share = k.add(share, s_it);
        let hash_m = homomorphic_hash(m, group);
        let hash_s = homomorphic_hash(s_it, group);
        let report = BaselineMessage::MaskedReport {
            round: t,
            masked,
            hash_m: hash_m.to_str_radix(16),
            hash_s: hash_s.to_str_radix(16),
        };
        if net.send(me, PartyId::Dc, report)?.is_delivered() {
            reports.insert(i, Report { masked, hash_m, hash_s });
        }
        let mut next = pos + 1;
        loop {
            if next > n {
                return Ok(stuck(net, StuckReason::NoInstruction { holder: i }, active, &reports));
            }
            if net.send(me, list[next], BaselineMessage::ShareForward { share })?.is_delivered() {
                break;
            }
            next += 1;
        }
        if net.trace().len() > step_cap {
            return Ok(stuck(net, StuckReason::NoInstruction { holder: i }, active, &reports));
        }
        prev = me;
        pos = next;
    };

    // Aggregation at the DC.
    let mut failed = Vec::new();
    let hk = homomorphic_hash(k.value(), group);
    let wraps_to = |lhs: BigUint, rhs: &BigUint, max_w: usize| {
        let mut x = lhs;
        for _ in 0..=max_w {
            if &x == rhs {
                return true;
            }
            x = group.mul(&x, &hk);
        }
        false
    };
    let expected = reports
        .values()
        .fold(homomorphic_hash(s0, group), |acc, r| group.mul(&acc, &r.hash_s));
    if !wraps_to(homomorphic_hash(final_share, group), &expected, n + 1) {
        failed.push(HashCheck::ShareSum);
    }
    for (&i, r) in &reports {
        let rhs = group.mul(
            &group.mul(&r.hash_m, &r.hash_s),
            &homomorphic_hash(params.static_shares[&i], group),
        );
        if !wraps_to(homomorphic_hash(r.masked, group), &rhs, 2) {
            failed.push(HashCheck::Report { sm: i });
        }
    }
    let run = BaselineRun {
        active,
        reported: reports.keys().copied().collect(),
        steps: net.trace().len(),
        elapsed: net.elapsed(),
        trace: net.trace().to_vec(),
    };
    if !failed.is_empty() {
        return Ok(BaselineOutcome::DetectedInconsistency { failed, run });
    }
    let masked_sum = reports.values().fold(0, |acc, r| k.add(acc, r.masked));
    let static_sum = reports
        .keys()
        .fold(0, |acc, i| k.add(acc, params.static_shares[i]));
    let aggregate = k.sub(k.sub(masked_sum, k.sub(final_share, s0)), static_sum);
    Ok(BaselineOutcome::Completed { aggregate, run })
}

/// What an eavesdropper on meter `i`'s links computes from one round:
/// `m̃ - (S_i - S_prev) = m + s_i^0 mod k`.
pub fn eavesdropped_value(masked: u64, share_in: u64, share_out: u64, k: Modulus) -> u64 {
    k.sub(masked, k.sub(share_out, share_in))
}

/// Reconstructs the eavesdropper's view of meter `sm` from a trace: its
/// masked report and the share sums it received and forwarded.
pub fn eavesdrop(trace: &[TraceRecord<BaselineMessage>], sm: u32, k: Modulus) -> Option<u64> {
    let me = PartyId::Sm(sm);
    let mut masked = None;
    let mut share_in = None;
    let mut share_out = None;
    for r in trace.iter().filter(|r| r.delivered) {
        match &r.message {
            BaselineMessage::MaskedReport { masked: m, .. } if r.from == me => masked = Some(*m),
            BaselineMessage::ShareForward { share } if r.to == me => share_in = Some(*share),
            BaselineMessage::ShareForward { share } if r.from == me => share_out = Some(*share),
            _ => {}
        }
    }
    Some(eavesdropped_value(masked?, share_in?, share_out?, k))
}

/// Every meter that reported, seen by the eavesdropper.
pub fn eavesdrop_all(trace: &[TraceRecord<BaselineMessage>], k: Modulus) -> BTreeMap<u32, u64> {
    let meters: BTreeSet<u32> = trace.iter().filter_map(|r| r.from.sm_index()).collect();
    meters
        .into_iter()
        .filter_map(|i| eavesdrop(trace, i, k).map(|v| (i, v)))
        .collect()
}
