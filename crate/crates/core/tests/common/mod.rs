//! Test-only helpers: random scenarios and a reference model of which
//! meters end up contributing.

#![allow(dead_code)]

use std::collections::BTreeMap;

use aggft::model::{BackendKind, Edge, FailureGraph, PartyId, Scenario, SendingList};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const MASK: BackendKind = BackendKind::Masking { k_bits: 32 };
pub const HE: BackendKind = BackendKind::Paillier { key_bits: 256 };

/// A random scenario with at most `max_n` meters: random working-link
/// density, random order, random `N_min`, occasional offline meters.
pub fn random_scenario(seed: u64, max_n: u32, backend: BackendKind) -> Scenario {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let full = FailureGraph::complete(n);
    let density: f64 = rng.random();
    let working: Vec<_> = full
        .edges()
        .iter()
        .filter(|_| rng.random_bool(density))
        .map(|e| e.endpoints())
        .collect();
    let graph = full.with_working(working).unwrap();
    let mut order: Vec<u32> = (1..=n).collect();
    order.shuffle(&mut rng);
    let sm_online = (1..=n)
        .filter(|_| rng.random_bool(0.1))
        .map(|i| (i, false))
        .collect();
    Scenario {
        n_sm: n,
        graph,
        sending_list: SendingList::new(order),
        n_min: rng.random_range(1..=n),
        round: rng.random_range(1..1000),
        measurements: (1..=n).map(|i| (i, rng.random_range(0..1 << 20))).collect(),
        backend,
        seed: rng.random(),
        sm_online,
        delta_t: rng.random_range(1..=20),
        prf_keys: BTreeMap::new(),
    }
}

/// What the reference model expects from a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    /// Meters that reach the DC in the first phase, in list order.
    pub responders: Vec<u32>,
    /// Meters that become active, in order.
    pub active: Vec<u32>,
    pub aggregate: Option<u64>,
}

/// Walks the sending list by index: start at the first meter with a
/// working DC link, then repeatedly jump to the next later responder whose
/// link from the current meter works, skipping the others. Stops early once
/// fewer than `N_min` meters could still contribute.
pub fn predict(s: &Scenario) -> Prediction {
    let up = |i: u32| s.sm_online.get(&i).copied().unwrap_or(true);
    let on = |a: PartyId, b: PartyId| {
        let e = Edge::new(a, b).unwrap();
        s.graph.working().contains(&e)
    };
    let list = s.sending_list.order();
    let responders: Vec<u32> = list
        .iter()
        .copied()
        .filter(|&i| up(i) && on(PartyId::Sm(i), PartyId::Dc))
        .collect();
    let n_min = s.n_min as usize;
    if responders.len() < n_min {
        return Prediction { responders, active: vec![], aggregate: None };
    }
    let mut active = vec![responders[0]];
    let mut next = 1;
    loop {
        let left = responders.len() - next;
        if left == 0 || active.len() + left < n_min {
            break;
        }
        let cur = *active.last().unwrap();
        let cand = responders[next];
        next += 1;
        if on(PartyId::Sm(cur), PartyId::Sm(cand)) {
            active.push(cand);
        }
    }
    let remaining_after = responders.len() - next;
    let aggregate = if active.len() + remaining_after < n_min {
        None
    } else {
        Some(active.iter().map(|i| s.measurements[i]).sum())
    };
    Prediction { responders, active, aggregate }
}
