//! The two example networks used throughout the documentation and tests.

use std::collections::BTreeMap;

use super::{BackendKind, FailureGraph, PartyId, Scenario, SendingList, DEFAULT_DELTA_T};

const DC: PartyId = PartyId::Dc;

fn sm(i: u32) -> PartyId {
    PartyId::Sm(i)
}

/// Four meters; SM2 and SM4 cannot reach the DC and the SM1–SM2 link is off.
pub fn four_sm_graph() -> FailureGraph {
    let on = [
        (sm(1), DC),
        (sm(3), DC),
        (sm(1), sm(3)),
        (sm(2), sm(3)),
        (sm(2), sm(4)),
        (sm(3), sm(4)),
    ];
    let off = [(sm(2), DC), (sm(4), DC), (sm(1), sm(2))];
    FailureGraph::new(4, on.iter().chain(off.iter()).copied(), on).expect("fixture graph")
}

/// Five meters, otherwise fully connected, with the DC–SM2 and SM3–SM4
/// links off.
pub fn five_sm_graph() -> FailureGraph {
    let full = FailureGraph::complete(5);
    let off = [
        super::Edge::new(DC, sm(2)).expect("edge"),
        super::Edge::new(sm(3), sm(4)).expect("edge"),
    ];
    let working: Vec<_> = full
        .edges()
        .iter()
        .filter(|e| !off.contains(e))
        .map(|e| e.endpoints())
        .collect();
    full.with_working(working).expect("fixture graph")
}

fn scenario(graph: FailureGraph, measurements: &[u64], backend: BackendKind) -> Scenario {
    let n = graph.n_sm();
    Scenario {
        n_sm: n,
        graph,
        sending_list: SendingList::new((1..=n).collect()),
        n_min: 2,
        round: 1,
        measurements: (1..=n).zip(measurements.iter().copied()).collect(),
        backend,
        seed: 2024,
        sm_online: BTreeMap::new(),
        delta_t: DEFAULT_DELTA_T,
        prf_keys: BTreeMap::new(),
    }
}

/// The four-meter network with `L = (1, 2, 3, 4)` and `N_min = 2`.
pub fn four_sm_scenario(backend: BackendKind) -> Scenario {
    scenario(four_sm_graph(), &[10, 5, 20, 7], backend)
}

/// The five-meter network with `L = (1, .., 5)` and `N_min = 2`.
pub fn five_sm_scenario(backend: BackendKind) -> Scenario {
    scenario(five_sm_graph(), &[3, 4, 5, 6, 7], backend)
}
