use std::collections::{BTreeMap, BTreeSet};
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Edge, FailureGraph, ModelError, PartyId};
use crate::masking::PrfKey;

/// Timeout charged per unanswered send when a scenario does not set one.
pub const DEFAULT_DELTA_T: u64 = 10;

/// Which privacy-preserving computation runs on top of the message flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BackendKind {
    /// Additive masking modulo `k = 2^k_bits`.
    Masking { k_bits: u32 },
    /// Paillier encryption with a modulus of `key_bits` bits.
    Paillier { key_bits: u32 },
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Masking { .. } => "masking",
            BackendKind::Paillier { .. } => "paillier",
        }
    }
}

/// Order in which meters are visited, without the implicit DC at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SendingList(Vec<u32>);

impl SendingList {
    pub fn new(order: Vec<u32>) -> Self {
        SendingList(order)
    }

    /// Accepts `[SM.., ]` or `[DC, SM.., DC]`. The DC may only appear as the
    /// first and last entry, and then must appear at both.
    pub fn from_parties(parties: &[PartyId]) -> Result<Self, ScenarioError> {
        let inner = match parties {
            [PartyId::Dc, inner @ .., PartyId::Dc] => inner,
            [PartyId::Dc, ..] | [.., PartyId::Dc] => return Err(ScenarioError::MalformedSendingList),
            all => all,
        };
        inner
            .iter()
            .map(|p| p.sm_index().ok_or(ScenarioError::MalformedSendingList))
            .collect::<Result<_, _>>()
            .map(SendingList)
    }

    pub fn order(&self) -> &[u32] {
        &self.0
    }

    pub fn to_parties(&self) -> Vec<PartyId> {
        let mut v = vec![PartyId::Dc];
        v.extend(self.0.iter().map(|&i| PartyId::Sm(i)));
        v.push(PartyId::Dc);
        v
    }

    /// Checks that the list names every meter `1..=n_sm` exactly once.
    pub fn check_permutation(&self, n_sm: u32) -> Result<(), ScenarioError> {
        let mut seen = BTreeSet::new();
        for &i in &self.0 {
            if !(1..=n_sm).contains(&i) {
                return Err(ScenarioError::UnknownParty(PartyId::Sm(i)));
            }
            if !seen.insert(i) {
                return Err(ScenarioError::DuplicateSmInList(i));
            }
        }
        match (1..=n_sm).find(|i| !seen.contains(i)) {
            Some(i) => Err(ScenarioError::SmMissingFromList(i)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("smart meter SM{0} appears more than once in the sending list")]
    DuplicateSmInList(u32),
    #[error("smart meter SM{0} is missing from the sending list")]
    SmMissingFromList(u32),
    #[error("sending list must name meters only, optionally framed by DC at both ends")]
    MalformedSendingList,
    #[error("working link {0}-{1} is not an edge of the network graph")]
    WorkingEdgeNotInGraph(PartyId, PartyId),
    #[error("modulus 2^{bits} does not exceed the total measurement {total}")]
    ModulusTooSmall { bits: u32, total: u128 },
    #[error("masking modulus must be 2^b with 1 <= b <= 64, got b = {0}")]
    InvalidModulus(u32),
    #[error("Paillier key size must be an even number of bits >= 64, got {0}")]
    InvalidKeySize(u32),
    #[error("N_min = {n_min} is outside 1..={n_sm}")]
    NMinOutOfRange { n_min: u32, n_sm: u32 },
    #[error("a scenario needs at least one smart meter")]
    NoMeters,
    #[error("no measurement for SM{0}")]
    MissingMeasurement(u32),
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("graph is defined over {graph} meters but the scenario has {scenario}")]
    GraphSizeMismatch { graph: u32, scenario: u32 },
    #[error("delta_t must be at least one tick")]
    ZeroDeltaT,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Everything needed to run one aggregation round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    pub n_sm: u32,
    pub graph: FailureGraph,
    pub sending_list: SendingList,
    pub n_min: u32,
    pub round: u64,
    pub measurements: BTreeMap<u32, u64>,
    pub backend: BackendKind,
    pub seed: u64,
    /// Meters listed as `false` are off for the round. Absent means on.
    pub sm_online: BTreeMap<u32, bool>,
    pub delta_t: u64,
    /// Pinned PRF keys; meters without an entry get one derived from `seed`.
    pub prf_keys: BTreeMap<u32, PrfKey>,
}

impl Scenario {
    pub fn is_online(&self, sm: u32) -> bool {
        self.sm_online.get(&sm).copied().unwrap_or(true)
    }

    pub fn total_measurement(&self) -> u128 {
        self.measurements.values().map(|&m| u128::from(m)).sum()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serialization is infallible")
    }

    /// Checks every scenario invariant, reporting the first violation.
    pub fn validate(self) -> Result<ValidScenario, ScenarioError> {
        if self.n_sm == 0 {
            return Err(ScenarioError::NoMeters);
        }
        if self.graph.n_sm() != self.n_sm {
            return Err(ScenarioError::GraphSizeMismatch {
                graph: self.graph.n_sm(),
                scenario: self.n_sm,
            });
        }
        self.sending_list.check_permutation(self.n_sm)?;
        if let Some(e) = self.graph.stray_working_edge() {
            let (a, b) = e.endpoints();
            return Err(ScenarioError::WorkingEdgeNotInGraph(a, b));
        }
        if !(1..=self.n_sm).contains(&self.n_min) {
            return Err(ScenarioError::NMinOutOfRange {
                n_min: self.n_min,
                n_sm: self.n_sm,
            });
        }
        let in_range = |i: &u32| (1..=self.n_sm).contains(i);
        let stray = self
            .measurements
            .keys()
            .chain(self.sm_online.keys())
            .chain(self.prf_keys.keys())
            .find(|i| !in_range(i));
        if let Some(&i) = stray {
            return Err(ScenarioError::UnknownParty(PartyId::Sm(i)));
        }
        if let Some(i) = (1..=self.n_sm).find(|i| !self.measurements.contains_key(i)) {
            return Err(ScenarioError::MissingMeasurement(i));
        }
        if self.delta_t == 0 {
            return Err(ScenarioError::ZeroDeltaT);
        }
        let total = self.total_measurement();
        let bits = match self.backend {
            BackendKind::Masking { k_bits } => {
                if !(1..=64).contains(&k_bits) {
                    return Err(ScenarioError::InvalidModulus(k_bits));
                }
                k_bits
            }
            BackendKind::Paillier { key_bits } => {
                if key_bits < 64 || key_bits % 2 != 0 {
                    return Err(ScenarioError::InvalidKeySize(key_bits));
                }
                // n has exactly key_bits bits, so 2^(key_bits - 1) < n; the
                // aggregate is also reported as a u64.
                (key_bits - 1).min(64)
            }
        };
        if total >= 1u128 << bits {
            return Err(ScenarioError::ModulusTooSmall { bits, total });
        }
        Ok(ValidScenario(self))
    }
}

/// A scenario that passed [`Scenario::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidScenario(Scenario);

impl ValidScenario {
    pub fn into_inner(self) -> Scenario {
        self.0
    }
}

impl Deref for ValidScenario {
    type Target = Scenario;

    fn deref(&self) -> &Scenario {
        &self.0
    }
}

/// On-disk JSON layout of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n_sm: u32,
    edges: Vec<[PartyId; 2]>,
    working_edges: Vec<[PartyId; 2]>,
    sending_list: Vec<PartyId>,
    n_min: u32,
    round: u64,
    measurements: BTreeMap<PartyId, u64>,
    backend: BackendKind,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sm_online: Option<BTreeMap<PartyId, bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta_t: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prf_keys: Option<BTreeMap<PartyId, PrfKey>>,
}

fn by_sm_index<V>(map: BTreeMap<PartyId, V>) -> Result<BTreeMap<u32, V>, ModelError> {
    map.into_iter()
        .map(|(p, v)| match p {
            PartyId::Sm(i) => Ok((i, v)),
            PartyId::Dc => Err(ModelError::UnexpectedDc),
        })
        .collect()
}

fn by_party<V>(map: &BTreeMap<u32, V>) -> BTreeMap<PartyId, V>
where
    V: Clone,
{
    map.iter().map(|(&i, v)| (PartyId::Sm(i), v.clone())).collect()
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = ScenarioError;

    fn try_from(f: ScenarioFile) -> Result<Self, Self::Error> {
        let pairs = |v: Vec<[PartyId; 2]>| v.into_iter().map(|[a, b]| (a, b)).collect::<Vec<_>>();
        let graph = FailureGraph::new(f.n_sm, pairs(f.edges), pairs(f.working_edges))?;
        Ok(Scenario {
            n_sm: f.n_sm,
            graph,
            sending_list: SendingList::from_parties(&f.sending_list)?,
            n_min: f.n_min,
            round: f.round,
            measurements: by_sm_index(f.measurements)?,
            backend: f.backend,
            seed: f.seed,
            sm_online: by_sm_index(f.sm_online.unwrap_or_default())?,
            delta_t: f.delta_t.unwrap_or(DEFAULT_DELTA_T),
            prf_keys: by_sm_index(f.prf_keys.unwrap_or_default())?,
        })
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        let pairs = |set: &BTreeSet<Edge>| {
            set.iter()
                .map(|e| {
                    let (a, b) = e.endpoints();
                    [a, b]
                })
                .collect()
        };
        ScenarioFile {
            n_sm: s.n_sm,
            edges: pairs(s.graph.edges()),
            working_edges: pairs(s.graph.working()),
            sending_list: s.sending_list.to_parties(),
            n_min: s.n_min,
            round: s.round,
            measurements: by_party(&s.measurements),
            backend: s.backend,
            seed: s.seed,
            sm_online: (!s.sm_online.is_empty()).then(|| by_party(&s.sm_online)),
            delta_t: Some(s.delta_t),
            prf_keys: (!s.prf_keys.is_empty()).then(|| by_party(&s.prf_keys)),
        }
    }
}
