use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::view::AdversaryView;
use crate::model::{BackendKind, Edge, FailureGraph, PartyId, RoundOutcome, Scenario, ScenarioError, SendingList, DEFAULT_DELTA_T};
use crate::protocol::{network_for, run_round, run_scenario, AnyBackend};
use crate::seed;

/// Parties under adversarial control.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corruption {
    #[serde(default)]
    pub dc: bool,
    #[serde(default)]
    pub sms: BTreeSet<u32>,
}

impl Corruption {
    pub fn contains(&self, p: PartyId) -> bool {
        match p {
            PartyId::Dc => self.dc,
            PartyId::Sm(i) => self.sms.contains(&i),
        }
    }
}

/// Everything the adversary chooses before the challenger acts. Nothing
/// here is checked until the challenger runs; invalid choices abort.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSetup {
    pub n_sm: u32,
    /// `E`, the links of the network graph.
    pub edges: Vec<[PartyId; 2]>,
    /// `E'`, the links the adversary leaves on.
    pub working_edges: Vec<[PartyId; 2]>,
    /// `L`, including the DC at both ends.
    pub sending_list: Vec<PartyId>,
    /// `(i*, j*)`.
    pub challenged: [u32; 2],
    pub m0: u64,
    pub m1: u64,
    /// Measurements of all other meters.
    pub mlist: BTreeMap<PartyId, u64>,
    pub n_min: u32,
    #[serde(default = "first_round")]
    pub round: u64,
    pub backend: BackendKind,
    #[serde(default)]
    pub corruption: Corruption,
    pub seed: u64,
}

fn first_round() -> u64 {
    1
}

impl GameSetup {
    /// A fully connected network with `L = (DC, 1, .., N, DC)`, meters
    /// `1` and `2` challenged and every other meter measuring `i`.
    pub fn complete(n_sm: u32, backend: BackendKind) -> Self {
        let g = FailureGraph::complete(n_sm);
        let edges: Vec<[PartyId; 2]> = g
            .edges()
            .iter()
            .map(|e| {
                let (a, b) = e.endpoints();
                [a, b]
            })
            .collect();
        GameSetup {
            n_sm,
            working_edges: edges.clone(),
            edges,
            sending_list: std::iter::once(PartyId::Dc)
                .chain((1..=n_sm).map(PartyId::Sm))
                .chain(std::iter::once(PartyId::Dc))
                .collect(),
            challenged: [1, 2],
            m0: 10,
            m1: 20,
            mlist: (3..=n_sm).map(|i| (PartyId::Sm(i), u64::from(i))).collect(),
            n_min: 2,
            round: 1,
            backend,
            corruption: Corruption::default(),
            seed: 0,
        }
    }

    /// Removes a link from `E'`.
    pub fn cut(&mut self, a: PartyId, b: PartyId) {
        self.working_edges
            .retain(|&[x, y]| !((x == a && y == b) || (x == b && y == a)));
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GameSetup { seed, ..self.clone() }
    }
}

/// Why the challenger stopped before running the protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum AbortReason {
    #[error("sending list must start and end with the DC and name every meter once")]
    BadSendingList,
    #[error("failure model is not a subgraph of the network: {0}")]
    BadFailureModel(String),
    #[error("challenged meters must be two distinct honest meters")]
    BadChallenge,
    #[error("measurement list must cover exactly the non-challenged meters")]
    IncompleteMeasurements,
    #[error("measurement outside the domain")]
    MeasurementOutOfDomain,
    #[error("a challenged meter cannot contribute under the failure model")]
    ChallengedCannotContribute,
    #[error("invalid round parameters: {0}")]
    InvalidParameters(String),
}

/// Game result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum GameOutcome {
    AdversaryWins,
    AdversaryLoses,
    ChallengerAbort { reason: AbortReason },
}

impl GameOutcome {
    pub fn won(&self) -> bool {
        *self == GameOutcome::AdversaryWins
    }

    pub fn aborted(&self) -> bool {
        matches!(self, GameOutcome::ChallengerAbort { .. })
    }
}

/// Exclusive upper bound on a single measurement.
pub fn measurement_bound(backend: BackendKind) -> u128 {
    match backend {
        BackendKind::Masking { k_bits } => 1u128 << k_bits.min(64),
        BackendKind::Paillier { key_bits } => 1u128 << key_bits.saturating_sub(1).min(64),
    }
}

fn pairs(v: &[[PartyId; 2]]) -> Vec<(PartyId, PartyId)> {
    v.iter().map(|&[a, b]| (a, b)).collect()
}

/// The challenger's checks before any bit is drawn. Returns the scenario
/// with measurements still to be assigned to the challenged meters.
pub fn check_setup(setup: &GameSetup) -> Result<Scenario, AbortReason> {
    let n = setup.n_sm;
    let list = &setup.sending_list;
    if list.len() != n as usize + 2 || list.first() != Some(&PartyId::Dc) || list.last() != Some(&PartyId::Dc) {
        return Err(AbortReason::BadSendingList);
    }
    let sending_list = SendingList::from_parties(list).map_err(|_| AbortReason::BadSendingList)?;
    sending_list.check_permutation(n).map_err(|_| AbortReason::BadSendingList)?;

    let bad_model = |e: &dyn std::fmt::Display| AbortReason::BadFailureModel(e.to_string());
    let full = FailureGraph::new(n, pairs(&setup.edges), pairs(&setup.edges)).map_err(|e| bad_model(&e))?;
    let mut working = BTreeSet::new();
    for &[a, b] in &setup.working_edges {
        let e = Edge::new(a, b).map_err(|e| bad_model(&e))?;
        if !full.edges().contains(&e) {
            return Err(bad_model(&format!("{a}–{b} is not a link of the network")));
        }
        working.insert(e);
    }
    let graph = full
        .with_working(working.iter().map(|e| e.endpoints()))
        .map_err(|e| bad_model(&e))?;

    let [i, j] = setup.challenged;
    let in_range = |x: u32| (1..=n).contains(&x);
    if i == j || !in_range(i) || !in_range(j) || setup.corruption.sms.contains(&i) || setup.corruption.sms.contains(&j) {
        return Err(AbortReason::BadChallenge);
    }
    let mut measurements = BTreeMap::new();
    for (&p, &m) in &setup.mlist {
        match p {
            PartyId::Sm(x) if in_range(x) && x != i && x != j => {
                measurements.insert(x, m);
            }
            _ => return Err(AbortReason::IncompleteMeasurements),
        }
    }
    if measurements.len() != n as usize - 2 {
        return Err(AbortReason::IncompleteMeasurements);
    }
    let bound = measurement_bound(setup.backend);
    if [setup.m0, setup.m1].iter().chain(measurements.values()).any(|&m| u128::from(m) >= bound) {
        return Err(AbortReason::MeasurementOutOfDomain);
    }
    measurements.insert(i, setup.m0);
    measurements.insert(j, setup.m1);

    let scenario = Scenario {
        n_sm: n,
        graph,
        sending_list,
        n_min: setup.n_min,
        round: setup.round,
        measurements,
        backend: setup.backend,
        seed: setup.seed,
        sm_online: BTreeMap::new(),
        delta_t: DEFAULT_DELTA_T,
        prf_keys: BTreeMap::new(),
    };
    let invalid = |e: ScenarioError| match e {
        ScenarioError::ModulusTooSmall { .. } => AbortReason::MeasurementOutOfDomain,
        other => AbortReason::InvalidParameters(other.to_string()),
    };
    scenario.clone().validate().map_err(invalid)?;

    // The message flow does not depend on measurements or the backend, so
    // a masking run over zeros shows who will contribute.
    let dry = Scenario {
        measurements: (1..=n).map(|x| (x, 0)).collect(),
        backend: BackendKind::Masking { k_bits: 64 },
        ..scenario.clone()
    };
    let outcome = run_scenario(dry).map_err(|e| AbortReason::InvalidParameters(e.to_string()))?;
    let contributes = |x: u32| outcome.reported_active.contains(&x);
    if outcome.aggregate.is_none() || !contributes(i) || !contributes(j) {
        return Err(AbortReason::ChallengedCannotContribute);
    }
    Ok(scenario)
}

/// A run of the challenger: the secret bit, the protocol outcome and the
/// adversary's view of it.
#[derive(Debug, Clone)]
pub struct Challenge {
    pub b: u8,
    /// Measurement assigned to `i*`.
    pub m_i: u64,
    pub outcome: RoundOutcome,
    pub view: AdversaryView,
}

/// Checks the setup, draws `b`, assigns `m_b` to `i*` and `m_{1-b}` to
/// `j*`, and runs the protocol on the adversary's network.
pub fn challenge(setup: &GameSetup) -> Result<Challenge, AbortReason> {
    let mut scenario = check_setup(setup)?;
    let b: u8 = seed::rng(setup.seed, "challenge-bit", &[]).random_range(0..=1);
    let [i, j] = setup.challenged;
    let (mi, mj) = if b == 0 { (setup.m0, setup.m1) } else { (setup.m1, setup.m0) };
    scenario.measurements.insert(i, mi);
    scenario.measurements.insert(j, mj);
    let valid = scenario
        .validate()
        .map_err(|e| AbortReason::InvalidParameters(e.to_string()))?;
    let backend = AnyBackend::for_scenario(&valid).map_err(|e| AbortReason::InvalidParameters(e.to_string()))?;
    let mut net = network_for(&valid);
    let outcome = run_round(&valid, &backend, &mut net).map_err(|e| AbortReason::InvalidParameters(e.to_string()))?;
    let view = AdversaryView::build(setup, &valid, &backend, &outcome);
    Ok(Challenge { b, m_i: mi, outcome, view })
}

/// An adversary's final step: a guess for `b` from what it saw.
pub type Strategy = fn(&AdversaryView) -> u8;

pub fn play_game(setup: &GameSetup, adversary: Strategy) -> GameOutcome {
    match challenge(setup) {
        Err(reason) => GameOutcome::ChallengerAbort { reason },
        Ok(c) if adversary(&c.view) == c.b => GameOutcome::AdversaryWins,
        Ok(_) => GameOutcome::AdversaryLoses,
    }
}
