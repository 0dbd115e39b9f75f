//! Deterministic message transport with static per-round link failures.
//!
//! A send over a working link to an online party is delivered and costs one
//! tick. Any other send times out after `delta_t` ticks and leaves the
//! receiver untouched. Link state never changes while a network exists.

use std::collections::{BTreeSet, VecDeque};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FailureGraph, ModelError, PartyId};

/// Messages carried by the network report a short kind tag for traces.
pub trait MessageKind {
    fn kind(&self) -> &'static str;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord<M> {
    /// Logical message step. Sends issued concurrently share a step.
    pub step: u32,
    /// Clock value when the send was attempted.
    pub tick: u64,
    pub from: PartyId,
    pub to: PartyId,
    pub message: M,
    pub delivered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendResult {
    Delivered,
    TimedOut,
}

impl SendResult {
    pub fn is_delivered(self) -> bool {
        self == SendResult::Delivered
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0} is offline and cannot send")]
    SenderOffline(PartyId),
}

/// A delivered message waiting to be handled by its receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope<M> {
    pub from: PartyId,
    pub to: PartyId,
    pub message: M,
}

#[derive(Debug, Clone)]
pub struct SimNetwork<M> {
    graph: FailureGraph,
    offline: BTreeSet<u32>,
    clock: u64,
    delta_t: u64,
    step: u32,
    concurrent: bool,
    /// Longest send cost seen in the current concurrent group.
    concurrent_cost: u64,
    trace: Vec<TraceRecord<M>>,
    inbox: VecDeque<Envelope<M>>,
}

impl<M: Clone> SimNetwork<M> {
    pub fn new(graph: FailureGraph, delta_t: u64) -> Self {
        SimNetwork {
            graph,
            offline: BTreeSet::new(),
            clock: 0,
            delta_t,
            step: 0,
            concurrent: false,
            concurrent_cost: 0,
            trace: Vec::new(),
            inbox: VecDeque::new(),
        }
    }

    /// Marks meters as off for the whole round.
    pub fn with_offline(mut self, meters: impl IntoIterator<Item = u32>) -> Self {
        self.offline.extend(meters);
        self
    }

    pub fn graph(&self) -> &FailureGraph {
        &self.graph
    }

    pub fn delta_t(&self) -> u64 {
        self.delta_t
    }

    pub fn is_online(&self, p: PartyId) -> bool {
        match p {
            PartyId::Dc => true,
            PartyId::Sm(i) => !self.offline.contains(&i),
        }
    }

    /// Current virtual time in ticks.
    pub fn elapsed(&self) -> u64 {
        self.clock
    }

    /// Sends between this call and [`end_concurrent`](Self::end_concurrent)
    /// share one message step and start at the same tick; the group takes
    /// as long as its slowest send.
    pub fn begin_concurrent(&mut self) {
        self.step += 1;
        self.concurrent = true;
        self.concurrent_cost = 0;
    }

    pub fn end_concurrent(&mut self) {
        self.concurrent = false;
        self.clock += std::mem::take(&mut self.concurrent_cost);
    }

    fn charge(&mut self, ticks: u64) {
        if self.concurrent {
            self.concurrent_cost = self.concurrent_cost.max(ticks);
        } else {
            self.clock += ticks;
        }
    }

    fn reachable(&self, from: PartyId, to: PartyId) -> Result<bool, NetError> {
        if !self.is_online(from) {
            return Err(NetError::SenderOffline(from));
        }
        Ok(self.graph.link_on(from, to)? && self.is_online(to))
    }

    fn record(&mut self, from: PartyId, to: PartyId, message: M, delivered: bool) {
        if !self.concurrent {
            self.step += 1;
        }
        self.trace.push(TraceRecord {
            step: self.step,
            tick: self.clock,
            from,
            to,
            message: message.clone(),
            delivered,
        });
        if delivered {
            self.inbox.push_back(Envelope { from, to, message });
        }
    }

    /// Attempts a send. Delivery is decided by the link state and whether
    /// the receiver is on; the sender learns the result through the ack or
    /// its absence.
    pub fn send(&mut self, from: PartyId, to: PartyId, message: M) -> Result<SendResult, NetError> {
        let delivered = self.reachable(from, to)?;
        self.record(from, to, message, delivered);
        if delivered {
            self.charge(1);
            Ok(SendResult::Delivered)
        } else {
            self.charge(self.delta_t);
            Ok(SendResult::TimedOut)
        }
    }

    /// Sends an acknowledgement. It travels with the message it answers and
    /// costs no extra time.
    pub fn send_ack(&mut self, from: PartyId, to: PartyId, message: M) -> Result<SendResult, NetError> {
        let delivered = self.reachable(from, to)?;
        self.record(from, to, message, delivered);
        Ok(if delivered {
            SendResult::Delivered
        } else {
            SendResult::TimedOut
        })
    }

    /// Lets time pass without any message, e.g. a party waiting forever.
    pub fn idle(&mut self, ticks: u64) {
        self.clock += ticks;
    }

    pub fn next_delivery(&mut self) -> Option<Envelope<M>> {
        self.inbox.pop_front()
    }

    pub fn pending(&self) -> usize {
        self.inbox.len()
    }

    pub fn trace(&self) -> &[TraceRecord<M>] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<TraceRecord<M>> {
        self.trace
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    tick: u64,
    from: PartyId,
    to: PartyId,
    kind: &'a str,
    delivered: bool,
}

/// Writes one JSON object per send attempt:
/// `{"tick":..,"from":..,"to":..,"kind":..,"delivered":..}`.
pub fn write_trace_jsonl<M: MessageKind, W: Write>(trace: &[TraceRecord<M>], mut out: W) -> io::Result<()> {
    for r in trace {
        let line = TraceLine {
            tick: r.tick,
            from: r.from,
            to: r.to,
            kind: r.message.kind(),
            delivered: r.delivered,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::four_sm_graph;

    #[derive(Debug, Clone, PartialEq)]
    struct Ping;

    impl MessageKind for Ping {
        fn kind(&self) -> &'static str {
            "ping"
        }
    }

    const DC: PartyId = PartyId::Dc;
    fn sm(i: u32) -> PartyId {
        PartyId::Sm(i)
    }

    #[test]
    fn example_links_decide_delivery() {
        let mut net = SimNetwork::new(four_sm_graph(), 5);
        assert_eq!(net.elapsed(), 0);
        assert_eq!(net.send(DC, sm(1), Ping), Ok(SendResult::Delivered));
        assert_eq!(net.elapsed(), 1);
        assert_eq!(net.send(DC, sm(2), Ping), Ok(SendResult::TimedOut));
        assert_eq!(net.elapsed(), 6);
        assert_eq!(
            net.send(sm(1), sm(1), Ping),
            Err(NetError::Model(ModelError::SelfLoop(sm(1))))
        );
        assert_eq!(net.trace().len(), 2);
    }

    #[test]
    fn timeout_costs_delta_t() {
        let mut net = SimNetwork::new(four_sm_graph(), 5);
        net.send(sm(4), DC, Ping).unwrap();
        assert_eq!(net.elapsed(), 5);
    }

    #[test]
    fn timed_out_send_leaves_receiver_untouched() {
        let mut net = SimNetwork::new(four_sm_graph(), 3);
        net.send(sm(1), sm(2), Ping).unwrap();
        assert_eq!(net.pending(), 0);
        assert!(net.next_delivery().is_none());
        assert!(!net.trace()[0].delivered);
    }

    #[test]
    fn offline_receiver_times_out_and_offline_sender_errors() {
        let mut net = SimNetwork::new(four_sm_graph(), 2).with_offline([3]);
        assert_eq!(net.send(DC, sm(3), Ping), Ok(SendResult::TimedOut));
        assert_eq!(net.send(sm(3), DC, Ping), Err(NetError::SenderOffline(sm(3))));
        assert_eq!(net.trace().len(), 1);
    }

    #[test]
    fn acks_are_free_and_concurrent_sends_share_a_step() {
        let mut net = SimNetwork::new(four_sm_graph(), 2);
        net.begin_concurrent();
        net.send(sm(1), DC, Ping).unwrap();
        net.send(sm(2), DC, Ping).unwrap();
        net.end_concurrent();
        net.send_ack(sm(3), sm(1), Ping).unwrap();
        let steps: Vec<_> = net.trace().iter().map(|r| r.step).collect();
        assert_eq!(steps, [1, 1, 2]);
        assert_eq!(net.elapsed(), 2);
        assert_eq!(net.trace()[1].tick, 0);
    }

    #[test]
    fn every_attempt_traced_once() {
        let mut net = SimNetwork::new(four_sm_graph(), 2);
        let pairs = [(DC, sm(1)), (DC, sm(2)), (sm(2), sm(4)), (sm(4), DC)];
        for (a, b) in pairs {
            net.send(a, b, Ping).unwrap();
        }
        let seen: Vec<_> = net.trace().iter().map(|r| (r.from, r.to)).collect();
        assert_eq!(seen, pairs);
        assert_eq!(net.pending(), 2);
    }

    #[test]
    fn jsonl_export() {
        let mut net = SimNetwork::new(four_sm_graph(), 4);
        net.send(DC, sm(1), Ping).unwrap();
        net.send(DC, sm(2), Ping).unwrap();
        let mut buf = Vec::new();
        write_trace_jsonl(net.trace(), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"tick\":0,\"from\":\"DC\",\"to\":\"SM1\",\"kind\":\"ping\",\"delivered\":true}\n\
             {\"tick\":1,\"from\":\"DC\",\"to\":\"SM2\",\"kind\":\"ping\",\"delivered\":false}\n"
        );
    }
}
