use std::collections::BTreeMap;

use thiserror::Error;

use super::backend::{AnyBackend, BackendError, ComputationBackend};
use crate::model::{PartyId, ProtocolMessage, RoundOutcome, ScenarioError, Scenario, ShareState, ValidScenario};
use crate::net::{NetError, SimNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("round exceeded {0} send attempts")]
    StepCapExceeded(usize),
    #[error("{from} could not reach {to} although its link was known to work")]
    UnexpectedTimeout { from: PartyId, to: PartyId },
    #[error("SM{0} was activated twice")]
    DoubleActivation(u32),
    #[error("{0} received a message it has no rule for")]
    UnexpectedMessage(PartyId),
}

/// Upper bound on send attempts in one round with `n` meters.
pub fn step_cap(n: u32) -> usize {
    10 * n as usize + 10
}

/// A fresh network for the scenario's links, timeout and offline meters.
pub fn network_for(scenario: &Scenario) -> SimNetwork<ProtocolMessage> {
    let offline = (1..=scenario.n_sm).filter(|&i| !scenario.is_online(i));
    SimNetwork::new(scenario.graph.clone(), scenario.delta_t).with_offline(offline)
}

/// `isLast = (L_rem = ∅) ∨ |L_rem ∪ L_act| < N_min`. The lists are disjoint.
fn check_last(rem: &[u32], act: &[u32], n_min: u32) -> bool {
    rem.is_empty() || rem.len() + act.len() < n_min as usize
}

struct Dc<A> {
    collected: BTreeMap<u32, Option<u64>>,
    aux: Option<A>,
}

struct Round<'a, B: ComputationBackend> {
    scenario: &'a Scenario,
    backend: &'a B,
    net: &'a mut SimNetwork<ProtocolMessage>,
    activated: Vec<u32>,
    outcome_eor: Option<(PartyId, Option<ShareState>, Vec<u32>)>,
}

impl<B: ComputationBackend> Round<'_, B> {
    fn send_expecting_delivery(&mut self, from: PartyId, to: PartyId, msg: ProtocolMessage) -> Result<(), ProtocolError> {
        if self.net.send(from, to, msg)?.is_delivered() {
            Ok(())
        } else {
            Err(ProtocolError::UnexpectedTimeout { from, to })
        }
    }

    /// Meter `i` takes over `S`, folds itself in and hands off.
    fn on_activation(
        &mut self,
        i: u32,
        from: PartyId,
        share: ShareState,
        mut rem: Vec<u32>,
        mut act: Vec<u32>,
    ) -> Result<(), ProtocolError> {
        if self.activated.contains(&i) {
            return Err(ProtocolError::DoubleActivation(i));
        }
        self.activated.push(i);
        let me = PartyId::Sm(i);
        // The DC learns of delivery from the link itself.
        if !from.is_dc() {
            self.net.send_ack(me, from, ProtocolMessage::AckS)?;
        }
        let share = self.backend.fold_measurement(&share, i)?;
        act.push(i);
        rem.retain(|&j| j != i);

        let mut is_last = check_last(&rem, &act, self.scenario.n_min);
        while !is_last {
            let j = rem[0];
            let msg = ProtocolMessage::Activation {
                share: share.clone(),
                remaining: rem.clone(),
                active: act.clone(),
            };
            if self.net.send(me, PartyId::Sm(j), msg)?.is_delivered() {
                return Ok(());
            }
            rem.remove(0);
            is_last = check_last(&rem, &act, self.scenario.n_min);
        }
        self.send_final_message(me, share, &rem, act)
    }

    fn send_final_message(
        &mut self,
        me: PartyId,
        share: ShareState,
        rem: &[u32],
        act: Vec<u32>,
    ) -> Result<(), ProtocolError> {
        let (share, active) = if rem.len() + act.len() < self.scenario.n_min as usize {
            (None, Vec::new())
        } else {
            (Some(share), act)
        };
        let msg = ProtocolMessage::EndOfRound {
            round: self.scenario.round,
            share,
            active,
        };
        // Every meter in L_rem reached the DC in the first phase, and links
        // are static.
        self.send_expecting_delivery(me, PartyId::Dc, msg)
    }
}

/// Executes one round of the fault-tolerant protocol.
///
/// Link failures and too few reachable meters are outcomes, not errors; an
/// error means the scenario or the engine broke an invariant.
pub fn run_round<B: ComputationBackend>(
    scenario: &ValidScenario,
    backend: &B,
    net: &mut SimNetwork<ProtocolMessage>,
) -> Result<RoundOutcome, ProtocolError> {
    let cap = step_cap(scenario.n_sm);
    let order = scenario.sending_list.order();
    let t = scenario.round;

    // A1: initial data, sent by all online meters at once.
    net.begin_concurrent();
    for &i in order {
        if net.is_online(PartyId::Sm(i)) {
            let payload = backend.initial_payload(i, t)?;
            net.send(PartyId::Sm(i), PartyId::Dc, ProtocolMessage::InitialData { round: t, sm: i, payload })?;
        }
    }
    net.end_concurrent();
    let mut dc = Dc::<B::Aux> {
        collected: BTreeMap::new(),
        aux: None,
    };
    while let Some(env) = net.next_delivery() {
        match env.message {
            ProtocolMessage::InitialData { sm, payload, .. } => {
                dc.collected.insert(sm, payload);
            }
            _ => return Err(ProtocolError::UnexpectedMessage(env.to)),
        }
    }
    let l_rem: Vec<u32> = order.iter().copied().filter(|i| dc.collected.contains_key(i)).collect();

    let mut round = Round {
        scenario,
        backend,
        net,
        activated: Vec::new(),
        outcome_eor: None,
    };
    let mut aggregate = None;

    if l_rem.len() >= scenario.n_min as usize {
        let (aux, share) = backend.init_share()?;
        dc.aux = Some(aux);
        let first = PartyId::Sm(l_rem[0]);
        let msg = ProtocolMessage::Activation {
            share,
            remaining: l_rem.clone(),
            active: Vec::new(),
        };
        round.send_expecting_delivery(PartyId::Dc, first, msg)?;

        // A2 and A3: deliver messages until the network is quiet.
        while let Some(env) = round.net.next_delivery() {
            if round.net.trace().len() > cap {
                return Err(ProtocolError::StepCapExceeded(cap));
            }
            match (env.to, env.message) {
                (PartyId::Sm(i), ProtocolMessage::Activation { share, remaining, active }) => {
                    round.on_activation(i, env.from, share, remaining, active)?;
                }
                // The sender already learned of delivery.
                (PartyId::Sm(_), ProtocolMessage::AckS) => {}
                (PartyId::Dc, ProtocolMessage::EndOfRound { share, active, .. }) => {
                    let aux = dc.aux.as_ref().expect("set before the first activation");
                    aggregate = backend.finalize(share.as_ref(), &active, &dc.collected, aux)?;
                    round.outcome_eor = Some((env.from, share, active));
                }
                (to, _) => return Err(ProtocolError::UnexpectedMessage(to)),
            }
        }
    }
    if round.net.trace().len() > cap {
        return Err(ProtocolError::StepCapExceeded(cap));
    }

    let (eor_sender, reported_active) = match round.outcome_eor.take() {
        Some((from, _, active)) => (Some(from), active),
        None => (None, Vec::new()),
    };
    let activated = std::mem::take(&mut round.activated);
    let trace = net.trace().to_vec();
    Ok(RoundOutcome {
        aggregate,
        active: activated,
        remaining_at_init: l_rem,
        reported_active,
        eor_sender,
        steps: trace.len(),
        elapsed: net.elapsed(),
        trace,
        terminated: true,
    })
}

/// Validates, builds the scenario's backend and network, and runs a round.
pub fn run_scenario(scenario: Scenario) -> Result<RoundOutcome, ProtocolError> {
    let valid = scenario.validate()?;
    let backend = AnyBackend::for_scenario(&valid)?;
    let mut net = network_for(&valid);
    run_round(&valid, &backend, &mut net)
}
